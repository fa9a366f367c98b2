#include "cm/cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cm/assemble/assembler.hpp"
#include "cm/cli/config.hpp"
#include "cm/data/object_io.hpp"
#include "cm/data/ply.hpp"
#include "cm/eval/evaluate.hpp"
#include "cm/geom/core.hpp"
#include "cm/train/trainer.hpp"

namespace cm::cli {
namespace {

using Json = nlohmann::ordered_json;

void emit(const Json& event) { std::cout << event.dump() << '\n' << std::flush; }

void note(const std::string& line) { std::cerr << line << '\n'; }

Json pose_json(const RigidTransform& pose) {
  std::vector<double> r(9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r[size_t(3 * a + b)] = pose.R(a, b);
  Json j;
  j["rotation"] = r;
  j["translation"] = std::vector<double>{pose.t[0], pose.t[1], pose.t[2]};
  return j;
}

Cloud fps_subsample(const Cloud& pts, int m) {
  if (pts.rows() <= m) return pts;
  const auto idx = geom::farthest_point_sample(pts, m);
  Cloud out(Eigen::Index(idx.size()), 3);
  for (size_t k = 0; k < idx.size(); ++k) out.row(Eigen::Index(k)) = pts.row(idx[k]);
  return out;
}

train::TrainState restore_checkpoint(const std::string& path, match::ModelConfig& mcfg,
                                     const RunConfig& cfg) {
  mcfg = train::checkpoint_model_config(path);
  train::TrainConfig tcfg = cfg.train_config();
  tcfg.model = mcfg;
  train::TrainState state;
  train::init_train_state(state, tcfg);
  train::load_train_checkpoint(path, state);
  return state;
}

int cmd_gen_toy(const RunConfig& cfg, const std::string& out) {
  const auto manifest = data::generate_toy_split(cfg.split_config(), out, cfg.get_int("threads"));
  Json ev;
  ev["event"] = "gen_toy";
  ev["out"] = out;
  ev["objects"] = manifest.objects.size();
  ev["train"] = manifest.split("train").size();
  ev["val"] = manifest.split("val").size();
  ev["test"] = manifest.split("test").size();
  ev["master_seed"] = manifest.master_seed;
  ev["point_budget"] = manifest.point_budget;
  emit(ev);
  note("wrote " + std::to_string(manifest.objects.size()) + " objects to " + out);
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_root, const std::string& out,
              const std::string& resume) {
  const auto manifest = data::load_manifest(data_root);
  const auto entries = manifest.split("train");
  if (entries.empty()) throw DataError("dataset has no train split: " + data_root);

  std::vector<data::FracturedObject> objects;
  objects.reserve(entries.size());
  for (const auto& e : entries) objects.push_back(data::load_entry(data_root, e));
  note("loaded " + std::to_string(objects.size()) + " training objects");

  train::TrainConfig tcfg = cfg.train_config();
  train::TrainState state;
  if (!resume.empty()) {
    const auto extra = ad::peek_checkpoint_extra(resume);
    tcfg.model = train::checkpoint_model_config(resume);
    try {
      if (extra.contains("seed")) tcfg.seed = extra["seed"].get<uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("checkpoint: bad seed field: ") + e.what());
    }
    train::init_train_state(state, tcfg);
    train::load_train_checkpoint(resume, state);
    note("resuming from " + resume + " at epoch " + std::to_string(state.next_epoch));
  } else {
    train::init_train_state(state, tcfg);
  }

  const auto on_epoch = [&](const train::EpochLog& log) {
    Json ev;
    ev["event"] = "epoch";
    ev["epoch"] = log.epoch;
    ev["orientation"] = log.orientation;
    ev["shape"] = log.shape;
    ev["occupancy"] = log.occupancy;
    ev["matching"] = log.matching;
    ev["total"] = log.total;
    ev["lr"] = log.lr;
    ev["steps"] = log.steps;
    ev["skipped"] = log.skipped;
    emit(ev);
    char line[160];
    std::snprintf(line, sizeof line, "epoch %3d  total %.6f  lr %.5f  steps %d  skipped %d",
                  log.epoch, log.total, log.lr, log.steps, log.skipped);
    note(line);
    train::save_train_checkpoint(out, state, tcfg);
  };

  train::train_epochs(state, objects, tcfg, on_epoch);
  train::save_train_checkpoint(out, state, tcfg);

  Json ev;
  ev["event"] = "train_done";
  ev["epochs"] = state.next_epoch;
  ev["checkpoint"] = out;
  ev["parameters"] = state.params.scalar_count();
  emit(ev);
  note("checkpoint written to " + out);
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& data_root,
             const std::string& split, const std::string& report_path, bool oracle_poses) {
  match::ModelConfig mcfg;
  auto state = restore_checkpoint(checkpoint, mcfg, cfg);

  eval::EvalConfig ecfg = cfg.eval_config();
  ecfg.oracle_poses = oracle_poses;
  const auto report = eval::evaluate_split(state.params, mcfg, data_root, split, ecfg);
  if (!report_path.empty()) eval::write_report(report_path, report);

  Json ev;
  ev["event"] = "eval";
  ev["split"] = report.split;
  ev["n_objects"] = report.n_objects;
  ev["crd"] = report.crd;
  ev["cd"] = report.cd;
  ev["rmse_r_deg"] = report.rmse_r_deg;
  ev["rmse_t"] = report.rmse_t;
  ev["geodesic_deg"] = report.geodesic_deg;
  ev["pa_crd"] = report.pa_crd;
  ev["pa_cd"] = report.pa_cd;
  ev["oracle_poses"] = oracle_poses;
  if (!report_path.empty()) ev["report"] = report_path;
  emit(ev);
  std::cerr << eval::render_summary(report);
  return 0;
}

int cmd_assemble(const RunConfig& cfg, const std::string& checkpoint, const std::string& object_dir,
                 const std::vector<std::string>& part_files, const std::string& out) {
  match::ModelConfig mcfg;
  auto state = restore_checkpoint(checkpoint, mcfg, cfg);

  std::vector<Cloud> parts;
  if (!object_dir.empty()) {
    const auto obj = data::load_object(object_dir);
    parts = obj.parts;
  } else {
    for (const auto& f : part_files) parts.push_back(data::read_ply(f).points);
  }
  if (parts.size() < 2) throw DataError("assemble needs at least 2 parts");

  const int m = cfg.eval_config().points_per_part;
  std::vector<Cloud> sub;
  sub.reserve(parts.size());
  for (const auto& p : parts) sub.push_back(fps_subsample(p, m));

  std::vector<RigidTransform> poses;
  Json ev;
  ev["event"] = "assemble";
  ev["parts"] = parts.size();
  if (parts.size() == 2) {
    const auto est = assemble::estimate_pairwise(state.params, sub[1], sub[0], mcfg);
    poses.push_back(RigidTransform{});
    poses.push_back(est.pose.transform);
    ev["mode"] = "pairwise";
    ev["graph_solve"] = false;
    ev["matchability"] = est.pose.matchability;
    ev["information"] = est.information;
    note("2 parts: pairwise estimate, no graph solve");
  } else {
    const auto estimator = [&](const Cloud& src, const Cloud& tgt) {
      return assemble::estimate_pairwise(state.params, src, tgt, mcfg);
    };
    const auto graph = assemble::build_pose_graph(sub, estimator);
    const auto global = assemble::assemble_graph(graph);
    poses = global.poses;
    ev["mode"] = "graph";
    ev["graph_solve"] = true;
    ev["anchor"] = global.anchor;
    ev["edges"] = graph.edges.size();
    note(std::to_string(parts.size()) + " parts: pose graph solve, anchor " +
         std::to_string(global.anchor));
  }

  Json doc;
  doc["version"] = 1;
  doc["mode"] = ev["mode"];
  doc["poses"] = Json::array();
  for (const auto& p : poses) doc["poses"].push_back(pose_json(p));
  std::ofstream f(out);
  if (!f) throw DataError("cannot open for writing: " + out);
  f << doc.dump(2) << '\n';
  if (!f) throw DataError("write failed: " + out);

  ev["out"] = out;
  emit(ev);
  return 0;
}

int cmd_export_heatmap(const RunConfig& cfg, const std::string& checkpoint,
                       const std::string& object_dir, int index, const std::string& prefix) {
  match::ModelConfig mcfg;
  auto state = restore_checkpoint(checkpoint, mcfg, cfg);

  const auto obj = data::load_object(object_dir);
  const int m = cfg.eval_config().points_per_part;
  const Cloud p_sub = fps_subsample(obj.parts[0], m);
  const Cloud q_sub = fps_subsample(obj.parts[1], m);
  if (index < 0 || index >= p_sub.rows()) {
    throw DataError("source point index " + std::to_string(index) + " out of range [0, " +
                    std::to_string(p_sub.rows()) + ")");
  }

  if (!mcfg.use_occupancy) throw DataError("checkpoint was trained without the occupancy branch");

  ad::Graph g;
  const auto fwd = match::model_forward(g, state.params, p_sub, q_sub, mcfg);

  const auto write_scores = [&](const std::string& path, const Mat& scores) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "index,x,y,z,score\n";
    char line[160];
    for (Eigen::Index j = 0; j < q_sub.rows(); ++j) {
      std::snprintf(line, sizeof line, "%lld,%.9g,%.9g,%.9g,%.9g\n", (long long)j, q_sub(j, 0),
                    q_sub(j, 1), q_sub(j, 2), scores(index, j));
      f << line;
    }
    if (!f) throw DataError("write failed: " + path);
  };

  std::vector<std::string> files;
  write_scores(prefix + "_shape.csv", g.value(fwd.cost.c_s));
  files.push_back(prefix + "_shape.csv");
  write_scores(prefix + "_occupancy.csv", g.value(fwd.cost.c_o));
  files.push_back(prefix + "_occupancy.csv");
  write_scores(prefix + "_combined.csv", g.value(fwd.cost.c));
  files.push_back(prefix + "_combined.csv");

  {
    const std::string path = prefix + "_orientation.csv";
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "index,x,y,z,xaxis_x,xaxis_y,xaxis_z,yaxis_x,yaxis_y,yaxis_z,mag_x,mag_y\n";
    const Mat frames = g.value(fwd.ori_p.frames);
    const Mat mag_x = g.value(fwd.ori_p.mag_x);
    const Mat mag_y = g.value(fwd.ori_p.mag_y);
    char line[320];
    for (Eigen::Index i = 0; i < p_sub.rows(); ++i) {
      std::snprintf(line, sizeof line,
                    "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", (long long)i,
                    p_sub(i, 0), p_sub(i, 1), p_sub(i, 2), frames(0, 3 * i), frames(0, 3 * i + 1),
                    frames(0, 3 * i + 2), frames(1, 3 * i), frames(1, 3 * i + 1),
                    frames(1, 3 * i + 2), mag_x(0, i), mag_y(0, i));
      f << line;
    }
    if (!f) throw DataError("write failed: " + path);
    files.push_back(path);
  }

  Json ev;
  ev["event"] = "export_heatmap";
  ev["object"] = object_dir;
  ev["index"] = index;
  ev["rows"] = q_sub.rows();
  ev["files"] = files;
  emit(ev);
  note("wrote " + std::to_string(files.size()) + " csv files with prefix " + prefix);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  CLI::App app{"combinative matching: shape-identical, occupancy-opposite assembly"};
  app.require_subcommand(1);

  const auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    for (const auto& e : cfg.entries()) {
      cmd->add_option_function<std::string>(
          "--" + e.key,
          [&overrides, key = e.key](const std::string& v) { overrides.emplace_back(key, v); },
          e.doc);
    }
  };

  auto* gen = app.add_subcommand("gen-toy", "generate the fractured toy dataset");
  std::string gen_out;
  gen->add_option("--out", gen_out, "dataset root directory")->required();
  add_config_flags(gen);

  auto* train = app.add_subcommand("train", "train the matcher on the train split");
  std::string train_data, train_out, train_resume;
  train->add_option("--data", train_data, "dataset root directory")->required();
  train->add_option("--out", train_out, "checkpoint path, rewritten every epoch")->required();
  train->add_option("--resume", train_resume, "checkpoint to continue from");
  add_config_flags(train);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string eval_ckpt, eval_data, eval_split = "test", eval_report;
  bool eval_oracle = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "dataset root directory")->required();
  eval_cmd->add_option("--split", eval_split, "split to evaluate (default test)");
  eval_cmd->add_option("--report", eval_report, "write the full metrics report here");
  eval_cmd->add_flag("--oracle-poses", eval_oracle, "score ground-truth poses instead");
  add_config_flags(eval_cmd);

  auto* asm_cmd = app.add_subcommand("assemble", "recover poses for a fractured object");
  std::string asm_ckpt, asm_object, asm_out;
  std::vector<std::string> asm_parts;
  asm_cmd->add_option("--checkpoint", asm_ckpt, "trained checkpoint")->required();
  asm_cmd->add_option("--object", asm_object, "object directory with object.json");
  asm_cmd->add_option("--parts", asm_parts, "part point clouds as ply files");
  asm_cmd->add_option("--out", asm_out, "output pose file")->required();
  add_config_flags(asm_cmd);

  auto* heat = app.add_subcommand("export-heatmap", "export matching scores for one source point");
  std::string heat_ckpt, heat_object, heat_prefix;
  int heat_index = 0;
  heat->add_option("--checkpoint", heat_ckpt, "trained checkpoint")->required();
  heat->add_option("--object", heat_object, "object directory with object.json")->required();
  heat->add_option("--index", heat_index, "source point index after subsampling");
  heat->add_option("--out-prefix", heat_prefix, "csv path prefix")->required();
  add_config_flags(heat);

  auto* config_cmd = app.add_subcommand("config", "configuration helpers");
  config_cmd->require_subcommand(1);
  auto* config_show = config_cmd->add_subcommand("show", "print every key with its provenance");
  add_config_flags(config_show);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [key, value] : overrides) cfg.set(key, value);

    if (gen->parsed()) return cmd_gen_toy(cfg, gen_out);
    if (train->parsed()) return cmd_train(cfg, train_data, train_out, train_resume);
    if (eval_cmd->parsed())
      return cmd_eval(cfg, eval_ckpt, eval_data, eval_split, eval_report, eval_oracle);
    if (asm_cmd->parsed()) {
      if (asm_object.empty() == asm_parts.empty())
        throw DataError("assemble needs exactly one of --object or --parts");
      return cmd_assemble(cfg, asm_ckpt, asm_object, asm_parts, asm_out);
    }
    if (heat->parsed()) return cmd_export_heatmap(cfg, heat_ckpt, heat_object, heat_index, heat_prefix);
    if (config_show->parsed()) {
      std::cout << cfg.show();
      return 0;
    }
    throw DataError("no command selected");
  } catch (const net::DegenerateFrame& e) {
    note(std::string("numeric failure: ") + e.what());
    return 3;
  } catch (const NonFiniteValue& e) {
    note(std::string("numeric failure: ") + e.what());
    return 3;
  } catch (const DegenerateInput& e) {
    note(std::string("numeric failure: ") + e.what());
    return 3;
  } catch (const ParseError& e) {
    note(std::string("data error: ") + e.what());
    return 2;
  } catch (const DataError& e) {
    note(std::string("data error: ") + e.what());
    return 2;
  } catch (const ShapeMismatch& e) {
    note(std::string("data error: ") + e.what());
    return 2;
  } catch (const EmptyCloud& e) {
    note(std::string("data error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    note(std::string("error: ") + e.what());
    return 3;
  }
}

}  // namespace cm::cli
