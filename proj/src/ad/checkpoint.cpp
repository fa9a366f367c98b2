#include "cm/ad/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

namespace cm::ad {

namespace {

using nlohmann::json;

void append_tensor(json& tensors, std::vector<double>& blob, const std::string& name,
                   const Mat& m) {
  json t;
  t["name"] = name;
  t["rows"] = m.rows();
  t["cols"] = m.cols();
  t["dtype"] = "f64";
  t["offset"] = blob.size() * sizeof(double);
  tensors.push_back(std::move(t));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) blob.push_back(m(i, j));
}

Mat read_tensor(const std::vector<char>& blob, std::size_t offset, Eigen::Index rows,
                Eigen::Index cols) {
  const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(double);
  if (offset + bytes > blob.size()) throw DataError("checkpoint: tensor extends past end of file");
  Mat m(rows, cols);
  const double* src = reinterpret_cast<const double*>(blob.data() + offset);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = *src++;
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params, const json& extra,
                     const AdamW* opt) {
  json tensors = json::array();
  std::vector<double> blob;
  for (const auto& name : params.names()) append_tensor(tensors, blob, name, params.at(name).value);
  json header;
  if (opt) {
    for (const auto& name : params.names()) {
      auto it = opt->state().find(name);
      if (it == opt->state().end()) continue;
      append_tensor(tensors, blob, "adamw.m." + name, it->second.m);
      append_tensor(tensors, blob, "adamw.v." + name, it->second.v);
    }
    header["adamw_step"] = opt->step_count();
  }
  header["format"] = "cm-checkpoint";
  header["version"] = 1;
  header["tensors"] = std::move(tensors);
  header["extra"] = extra;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot open for writing: " + path);
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(double)));
  if (!out) throw DataError("checkpoint: write failed: " + path);
}

json load_checkpoint(const std::string& path, ParamStore& params, AdamW* opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "cm-checkpoint")
    throw ParseError("checkpoint: unrecognized format tag");

  std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t loaded = 0;
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name");
    if (t.value("dtype", "") != "f64") throw ParseError("checkpoint: unsupported dtype for " + name);
    const Mat m = read_tensor(blob, t.at("offset").get<std::size_t>(),
                              t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
    if (name.rfind("adamw.", 0) == 0) {
      if (!opt) continue;
      const bool is_m = name.rfind("adamw.m.", 0) == 0;
      const std::string pname = name.substr(8);
      if (!params.contains(pname)) throw DataError("checkpoint: moment for unknown parameter " + pname);
      auto& mo = opt->state()[pname];
      (is_m ? mo.m : mo.v) = m;
      continue;
    }
    if (!params.contains(name)) throw DataError("checkpoint: unknown parameter " + name);
    Param& p = params.at(name);
    if (p.value.rows() != m.rows() || p.value.cols() != m.cols())
      throw DataError("checkpoint: shape mismatch for " + name);
    p.value = m;
    ++loaded;
  }
  if (loaded != params.size()) throw DataError("checkpoint: parameter set incomplete");
  if (opt && header.contains("adamw_step")) opt->set_step_count(header["adamw_step"].get<int64_t>());
  return header.value("extra", json::object());
}

json peek_checkpoint_extra(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "cm-checkpoint")
    throw ParseError("checkpoint: unrecognized format tag");
  return header.value("extra", json::object());
}

}  // namespace cm::ad
