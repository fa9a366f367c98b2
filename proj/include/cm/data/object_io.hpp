#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cm/data/toy.hpp"

namespace cm::data {

struct ManifestEntry {
  int id = 0;
  int pattern = 0;
  std::string split;  // "train", "val", or "test"
  uint64_t seed = 0;
  std::string dir;  // relative to the dataset root
};

struct DatasetManifest {
  uint64_t master_seed = 0;
  double tau = 0.018;
  int point_budget = 0;
  std::vector<ManifestEntry> objects;

  std::vector<ManifestEntry> split(const std::string& name) const;
};

struct SplitConfig {
  ToyParams toy;
  int train_per_pattern = 200;  // patterns 1-3
  int val_per_pattern = 50;     // patterns 1-3
  int test_per_pattern = 50;    // patterns 4-6
  uint64_t master_seed = 0;
};

void save_object(const std::filesystem::path& dir, const FracturedObject& obj);
FracturedObject load_object(const std::filesystem::path& dir);

void save_manifest(const std::filesystem::path& root, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& root);

// Generates and writes the full dataset: train/val draw from patterns 1-3,
// test from the inverted twins 4-6. Returns the manifest it wrote. Objects are
// seeded independently, so the output is identical for any worker count.
DatasetManifest generate_toy_split(const SplitConfig& config, const std::filesystem::path& root,
                                   int threads = 1);

FracturedObject load_entry(const std::filesystem::path& root, const ManifestEntry& entry);

}  // namespace cm::data
