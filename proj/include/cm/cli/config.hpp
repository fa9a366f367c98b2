#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cm/data/object_io.hpp"
#include "cm/eval/evaluate.hpp"
#include "cm/train/trainer.hpp"

namespace cm::cli {

enum class Provenance { kPaperDefault, kDeviationDefault, kUserSet };

struct ConfigEntry {
  std::string key;
  std::string value;
  std::string default_value;
  Provenance provenance = Provenance::kDeviationDefault;
  std::string doc;
};

// Flat key = value configuration with dotted sections. Every key doubles as a
// command-line flag; flags override file values. Defaults matching published
// hyperparameters are tagged paper-default, everything else deviation-default.
class RunConfig {
 public:
  RunConfig();

  // "[section]" headers prefix following keys; bare dotted keys also work.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);  // marks user-set
  bool has(const std::string& key) const;

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  uint64_t get_uint64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  const std::vector<ConfigEntry>& entries() const { return entries_; }
  std::string show() const;

  data::SplitConfig split_config() const;
  match::ModelConfig model_config() const;
  loss::LossConfig loss_config() const;
  train::TrainConfig train_config() const;
  eval::EvalConfig eval_config() const;

 private:
  void define(const std::string& key, const std::string& value, Provenance prov,
              const std::string& doc);
  ConfigEntry& entry(const std::string& key);
  const ConfigEntry& entry(const std::string& key) const;

  std::vector<ConfigEntry> entries_;
};

}  // namespace cm::cli
