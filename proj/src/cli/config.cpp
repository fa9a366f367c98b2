#include "cm/cli/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cm/geom/types.hpp"

namespace cm::cli {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

const char* provenance_tag(Provenance p) {
  switch (p) {
    case Provenance::kPaperDefault: return "paper-default";
    case Provenance::kDeviationDefault: return "deviation-default";
    case Provenance::kUserSet: return "user-set";
  }
  return "?";
}

}  // namespace

RunConfig::RunConfig() {
  const Provenance paper = Provenance::kPaperDefault;
  const Provenance desk = Provenance::kDeviationDefault;

  define("seed", "0", desk, "master seed for data generation and training");
  define("threads", "1", desk, "worker cap for parallel sections");

  define("data.tau", "0.018", paper, "correspondence distance threshold");
  define("data.point_budget", "1024", desk, "points sampled per object");
  define("data.plate_width", "1.0", desk, "plate width before normalization");
  define("data.plate_height", "0.6", desk, "plate height before normalization");
  define("data.extrude_frac", "0.2", desk, "prism depth as a fraction of width");
  define("data.teeth_min", "4", desk, "minimum interface teeth");
  define("data.teeth_max", "8", desk, "maximum interface teeth");
  define("data.tooth_height_min", "0.05", desk, "minimum tooth height");
  define("data.tooth_height_max", "0.15", desk, "maximum tooth height");
  define("data.translation_range", "0.5", paper, "scramble translation half-range");
  define("data.train_per_pattern", "200", paper, "training objects per pattern");
  define("data.val_per_pattern", "50", paper, "validation objects per pattern");
  define("data.test_per_pattern", "50", paper, "test objects per pattern");

  define("model.channels", "32", desk, "equivariant channels entering the encoder");
  define("model.widths", "16,24,32", desk, "encoder stage widths");
  define("model.knn", "16", desk, "neighborhood size for edge features");
  define("model.slope", "0.2", desk, "leaky relu negative slope");
  define("model.descriptor_dim", "512", paper, "shape/occupancy descriptor width");
  define("model.attention_hidden", "64", desk, "cross attention hidden width");
  define("model.sinkhorn_iterations", "100", paper, "sinkhorn normalization sweeps");
  define("model.topk", "128", paper, "confident matches kept per pair");
  define("model.use_occupancy", "true", paper, "gate matches on occupancy opposition");
  define("model.norm_eps", "1e-5", desk, "normalization epsilon");

  define("loss.delta_p", "0.1", paper, "circle loss positive margin");
  define("loss.delta_n", "1.4", paper, "circle loss negative margin");
  define("loss.gamma", "24", paper, "circle loss scale");
  define("loss.lambda_d", "0.1", paper, "orientation loss weight");
  define("loss.lambda_s", "0.5", paper, "shape circle loss weight");
  define("loss.lambda_o", "0.5", paper, "occupancy circle loss weight");
  define("loss.plus_one", "false", paper, "use the log1p circle loss variant");

  define("train.lr", "0.01", paper, "adamw base learning rate, cosine annealed");
  define("train.weight_decay", "1e-4", desk, "adamw weight decay");
  define("train.epochs", "30", desk, "training epochs");
  define("train.points_per_part", "192", desk, "points subsampled per part per step");
  define("train.objects_per_epoch", "150", desk, "objects visited per epoch, 0 = all");
  define("train.grad_clip", "1.0", desk, "global gradient norm clip, 0 = off");

  define("eval.points_per_part", "192", desk, "points subsampled per part at inference");
  define("eval.pa_crd", "0.05", desk, "part accuracy threshold on relative displacement");
  define("eval.pa_cd", "0.01", desk, "part accuracy threshold on chamfer distance");
}

void RunConfig::define(const std::string& key, const std::string& value, Provenance prov,
                       const std::string& doc) {
  entries_.push_back({key, value, value, prov, doc});
}

ConfigEntry& RunConfig::entry(const std::string& key) {
  for (auto& e : entries_)
    if (e.key == key) return e;
  throw ParseError("unknown config key: " + key);
}

const ConfigEntry& RunConfig::entry(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.key == key) return e;
  throw ParseError("unknown config key: " + key);
}

bool RunConfig::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const ConfigEntry& e) { return e.key == key; });
}

void RunConfig::set(const std::string& key, const std::string& value) {
  ConfigEntry& e = entry(key);
  e.value = trim(value);
  e.provenance = Provenance::kUserSet;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ParseError(path + ": line " + std::to_string(lineno) + ": unterminated section");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    if (!has(key))
      throw ParseError(path + ": line " + std::to_string(lineno) + ": unknown key: " + key);
    ConfigEntry& e = entry(key);
    e.value = value;
    e.provenance = Provenance::kUserSet;
  }
}

const std::string& RunConfig::get(const std::string& key) const { return entry(key).value; }

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": not a number: " + v);
  }
}

int RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(n);
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": not an integer: " + v);
  }
}

uint64_t RunConfig::get_uint64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<uint64_t>(n);
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": not an unsigned integer: " + v);
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key " + key + ": not a boolean: " + get(key));
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  const std::string& v = get(key);
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ParseError("config key " + key + ": empty list item in: " + v);
    try {
      size_t pos = 0;
      out.push_back(static_cast<int>(std::stol(item, &pos)));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("config key " + key + ": not an integer list: " + v);
    }
  }
  if (out.empty()) throw ParseError("config key " + key + ": empty list: " + v);
  return out;
}

std::string RunConfig::show() const {
  size_t key_w = 0, val_w = 0;
  for (const auto& e : entries_) {
    key_w = std::max(key_w, e.key.size());
    val_w = std::max(val_w, e.value.size());
  }
  std::string out;
  char buf[512];
  for (const auto& e : entries_) {
    std::snprintf(buf, sizeof(buf), "%-*s = %-*s  [%s]  %s\n", static_cast<int>(key_w),
                  e.key.c_str(), static_cast<int>(val_w), e.value.c_str(),
                  provenance_tag(e.provenance), e.doc.c_str());
    out += buf;
  }
  return out;
}

data::SplitConfig RunConfig::split_config() const {
  data::SplitConfig cfg;
  cfg.toy.plate_width = get_double("data.plate_width");
  cfg.toy.plate_height = get_double("data.plate_height");
  cfg.toy.extrude_frac = get_double("data.extrude_frac");
  cfg.toy.teeth_min = get_int("data.teeth_min");
  cfg.toy.teeth_max = get_int("data.teeth_max");
  cfg.toy.tooth_height_min = get_double("data.tooth_height_min");
  cfg.toy.tooth_height_max = get_double("data.tooth_height_max");
  cfg.toy.point_budget = get_int("data.point_budget");
  cfg.toy.tau = get_double("data.tau");
  cfg.toy.translation_range = get_double("data.translation_range");
  cfg.train_per_pattern = get_int("data.train_per_pattern");
  cfg.val_per_pattern = get_int("data.val_per_pattern");
  cfg.test_per_pattern = get_int("data.test_per_pattern");
  cfg.master_seed = get_uint64("seed");
  return cfg;
}

match::ModelConfig RunConfig::model_config() const {
  match::ModelConfig cfg;
  cfg.backbone.channels = get_int("model.channels");
  cfg.backbone.widths = get_int_list("model.widths");
  cfg.backbone.knn = get_int("model.knn");
  cfg.backbone.slope = get_double("model.slope");
  cfg.descriptor_dim = get_int("model.descriptor_dim");
  cfg.attention_hidden = get_int("model.attention_hidden");
  cfg.sinkhorn_iterations = get_int("model.sinkhorn_iterations");
  cfg.topk = get_int("model.topk");
  cfg.use_occupancy = get_bool("model.use_occupancy");
  cfg.norm_eps = get_double("model.norm_eps");
  return cfg;
}

loss::LossConfig RunConfig::loss_config() const {
  loss::LossConfig cfg;
  cfg.delta_p = get_double("loss.delta_p");
  cfg.delta_n = get_double("loss.delta_n");
  cfg.gamma = get_double("loss.gamma");
  cfg.lambda_d = get_double("loss.lambda_d");
  cfg.lambda_s = get_double("loss.lambda_s");
  cfg.lambda_o = get_double("loss.lambda_o");
  cfg.plus_one = get_bool("loss.plus_one");
  return cfg;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig cfg;
  cfg.model = model_config();
  cfg.loss = loss_config();
  cfg.adamw.lr = get_double("train.lr");
  cfg.adamw.weight_decay = get_double("train.weight_decay");
  cfg.epochs = get_int("train.epochs");
  cfg.points_per_part = get_int("train.points_per_part");
  cfg.objects_per_epoch = get_int("train.objects_per_epoch");
  cfg.grad_clip = get_double("train.grad_clip");
  cfg.seed = get_uint64("seed");
  return cfg;
}

eval::EvalConfig RunConfig::eval_config() const {
  eval::EvalConfig cfg;
  cfg.points_per_part = get_int("eval.points_per_part");
  cfg.pa_crd_threshold = get_double("eval.pa_crd");
  cfg.pa_cd_threshold = get_double("eval.pa_cd");
  return cfg;
}

}  // namespace cm::cli
