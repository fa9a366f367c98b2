#include "cm/data/ply.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace cm::data {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& what) {
  throw ParseError(path.string() + ": line " + std::to_string(line) + ": " + what);
}

bool next_line(std::istream& in, std::string& line, int& line_no) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_no;
  return true;
}

void expect_line(std::istream& in, const std::string& want, const std::filesystem::path& path,
                 int& line_no) {
  std::string line;
  if (!next_line(in, line, line_no)) fail(path, line_no + 1, "unexpected end of file, expected '" + want + "'");
  if (line != want) fail(path, line_no, "expected '" + want + "', got '" + line + "'");
}

}  // namespace

void write_ply(const std::filesystem::path& path, const Cloud& points,
               const std::vector<uint8_t>& mating) {
  if (size_t(points.rows()) != mating.size()) {
    throw ShapeMismatch("ply write: " + std::to_string(points.rows()) + " points but " +
                        std::to_string(mating.size()) + " mating flags");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << points.rows()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
         "property uchar mating\nend_header\n";
  char buf[32];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const int len = std::snprintf(buf, sizeof buf, "%.17g", points(i, a));
      out.write(buf, len);
      out.put(' ');
    }
    out << int(mating[size_t(i)]) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

PlyCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  int line_no = 0;
  std::string line;

  expect_line(in, "ply", path, line_no);
  expect_line(in, "format ascii 1.0", path, line_no);

  Eigen::Index count = -1;
  while (true) {
    if (!next_line(in, line, line_no)) fail(path, line_no + 1, "header ended without end_header");
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "element") {
      std::string name;
      long long n = -1;
      ls >> name >> n;
      if (name != "vertex" || n < 0) fail(path, line_no, "expected 'element vertex <count>'");
      count = Eigen::Index(n);
    } else if (word != "property") {
      fail(path, line_no, "unexpected header line '" + line + "'");
    }
  }
  if (count < 0) fail(path, line_no, "header has no vertex element");

  PlyCloud out;
  out.points.resize(count, 3);
  out.mating.resize(size_t(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!next_line(in, line, line_no)) {
      fail(path, line_no + 1,
           "truncated: expected " + std::to_string(count) + " vertices, got " + std::to_string(i));
    }
    std::istringstream ls(line);
    double x, y, z;
    int flag;
    if (!(ls >> x >> y >> z >> flag) || (flag != 0 && flag != 1)) {
      fail(path, line_no, "bad vertex line '" + line + "'");
    }
    out.points.row(i) << x, y, z;
    out.mating[size_t(i)] = uint8_t(flag);
  }
  return out;
}

}  // namespace cm::data
