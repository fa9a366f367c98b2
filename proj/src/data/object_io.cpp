#include "cm/data/object_io.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "cm/data/ply.hpp"

namespace cm::data {
namespace {

using Json = nlohmann::ordered_json;

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

Json pose_to_json(const RigidTransform& pose) {
  Json j;
  std::vector<double> r(9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r[size_t(3 * a + b)] = pose.R(a, b);
  j["rotation"] = r;
  j["translation"] = std::vector<double>{pose.t[0], pose.t[1], pose.t[2]};
  return j;
}

RigidTransform pose_from_json(const Json& j, const std::filesystem::path& path) {
  RigidTransform pose;
  const auto& r = j.at("rotation");
  const auto& t = j.at("translation");
  if (r.size() != 9 || t.size() != 3) {
    throw ParseError(path.string() + ": pose needs 9 rotation and 3 translation entries");
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) pose.R(a, b) = r[size_t(3 * a + b)].get<double>();
  for (int a = 0; a < 3; ++a) pose.t[a] = t[size_t(a)].get<double>();
  if (!is_rotation(pose.R, 1e-6)) {
    throw ParseError(path.string() + ": stored rotation is not orthonormal");
  }
  return pose;
}

}  // namespace

std::vector<ManifestEntry> DatasetManifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : objects) {
    if (e.split == name) out.push_back(e);
  }
  return out;
}

void save_object(const std::filesystem::path& dir, const FracturedObject& obj) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());

  Json j;
  j["version"] = 1;
  j["pattern"] = obj.pattern;
  j["seed"] = obj.seed;
  j["tau"] = obj.tau;
  j["parts"] = Json::array();
  for (size_t i = 0; i < obj.parts.size(); ++i) {
    const std::string name = "part" + std::to_string(i) + ".ply";
    write_ply(dir / name, obj.parts[i], obj.mating[i]);
    Json part = pose_to_json(obj.gt_poses[i]);
    part["file"] = name;
    j["parts"].push_back(part);
  }
  write_json(dir / "object.json", j);
}

FracturedObject load_object(const std::filesystem::path& dir) {
  const auto meta_path = dir / "object.json";
  const Json j = load_json(meta_path);
  FracturedObject obj;
  try {
    obj.pattern = j.at("pattern").get<int>();
    obj.seed = j.at("seed").get<uint64_t>();
    obj.tau = j.at("tau").get<double>();
    for (const auto& part : j.at("parts")) {
      const PlyCloud ply = read_ply(dir / part.at("file").get<std::string>());
      obj.parts.push_back(ply.points);
      obj.mating.push_back(ply.mating);
      obj.gt_poses.push_back(pose_from_json(part, meta_path));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }
  if (obj.parts.size() < 2) throw ParseError(meta_path.string() + ": object has fewer than 2 parts");
  return obj;
}

void save_manifest(const std::filesystem::path& root, const DatasetManifest& manifest) {
  Json j;
  j["version"] = 1;
  j["master_seed"] = manifest.master_seed;
  j["tau"] = manifest.tau;
  j["point_budget"] = manifest.point_budget;
  j["objects"] = Json::array();
  for (const auto& e : manifest.objects) {
    Json o;
    o["id"] = e.id;
    o["pattern"] = e.pattern;
    o["split"] = e.split;
    o["seed"] = e.seed;
    o["dir"] = e.dir;
    j["objects"].push_back(o);
  }
  write_json(root / "manifest.json", j);
}

DatasetManifest load_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.json";
  const Json j = load_json(path);
  DatasetManifest m;
  try {
    m.master_seed = j.at("master_seed").get<uint64_t>();
    m.tau = j.at("tau").get<double>();
    m.point_budget = j.at("point_budget").get<int>();
    for (const auto& o : j.at("objects")) {
      ManifestEntry e;
      e.id = o.at("id").get<int>();
      e.pattern = o.at("pattern").get<int>();
      e.split = o.at("split").get<std::string>();
      e.seed = o.at("seed").get<uint64_t>();
      e.dir = o.at("dir").get<std::string>();
      m.objects.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return m;
}

FracturedObject load_entry(const std::filesystem::path& root, const ManifestEntry& entry) {
  return load_object(root / entry.dir);
}

DatasetManifest generate_toy_split(const SplitConfig& config, const std::filesystem::path& root,
                                   int threads) {
  DatasetManifest manifest;
  manifest.master_seed = config.master_seed;
  manifest.tau = config.toy.tau;
  manifest.point_budget = config.toy.point_budget;

  struct Block {
    const char* split;
    int first_pattern;
    int per_pattern;
  };
  const Block blocks[] = {{"train", 1, config.train_per_pattern},
                          {"val", 1, config.val_per_pattern},
                          {"test", 4, config.test_per_pattern}};

  char dir_buf[64];
  int id = 0;
  for (const auto& block : blocks) {
    for (int pattern = block.first_pattern; pattern < block.first_pattern + 3; ++pattern) {
      for (int k = 0; k < block.per_pattern; ++k) {
        ManifestEntry e;
        e.id = id++;
        e.pattern = pattern;
        e.split = block.split;
        e.seed = geom::stream_seed(config.master_seed, uint64_t(pattern), uint64_t(e.id));
        std::snprintf(dir_buf, sizeof dir_buf, "%s/obj_%06d", block.split, e.id);
        e.dir = dir_buf;
        manifest.objects.push_back(e);
      }
    }
  }

  const auto generate_one = [&](const ManifestEntry& e) {
    const FracturedObject obj = generate_toy_object(e.pattern, e.seed, config.toy);
    save_object(root / e.dir, obj);
  };

  if (threads <= 1) {
    for (const auto& e : manifest.objects) generate_one(e);
  } else {
    std::atomic<size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;
    const auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= manifest.objects.size()) return;
        try {
          generate_one(manifest.objects[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(fail_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const size_t count = std::min<size_t>(size_t(threads), manifest.objects.size());
    pool.reserve(count);
    for (size_t i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  save_manifest(root, manifest);
  return manifest;
}

}  // namespace cm::data
