#include "cm/data/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cm::data {
namespace {

constexpr double kAreaFloor = 1e-15;

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d1 = cross2(a, b, p);
  const double d2 = cross2(b, c, p);
  const double d3 = cross2(c, a, p);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

double triangle_area3(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Vec2>& poly) {
  const int n = int(poly.size());
  if (n < 3) throw DataError("polygon needs at least 3 vertices, got " + std::to_string(n));
  if (polygon_area(poly) <= 0.0) throw DataError("polygon must be counterclockwise");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<int, 3>> tris;
  tris.reserve(size_t(n) - 2);

  int guard = 0;
  while (idx.size() > 3) {
    const int m = int(idx.size());
    bool clipped = false;
    for (int i = 0; i < m; ++i) {
      const int ia = idx[(i + m - 1) % m];
      const int ib = idx[i];
      const int ic = idx[(i + 1) % m];
      const Vec2& a = poly[ia];
      const Vec2& b = poly[ib];
      const Vec2& c = poly[ic];
      const double area2 = cross2(a, b, c);
      if (area2 < 0.0) continue;  // reflex corner
      bool blocked = false;
      if (area2 > 0.0) {
        for (int j : idx) {
          if (j == ia || j == ib || j == ic) continue;
          if (point_in_triangle(poly[j], a, b, c)) {
            blocked = true;
            break;
          }
        }
      }
      if (blocked) continue;
      if (0.5 * area2 > kAreaFloor) tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) {
      if (++guard > 2) throw DataError("ear clipping failed; polygon is not simple");
      // Degenerate corners can block progress; drop the flattest one and retry.
      int worst = 0;
      double worst_area = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a2 = std::abs(cross2(poly[idx[(i + m - 1) % m]], poly[idx[i]],
                                          poly[idx[(i + 1) % m]]));
        if (a2 < worst_area) {
          worst_area = a2;
          worst = i;
        }
      }
      idx.erase(idx.begin() + worst);
    }
  }
  const double last = 0.5 * cross2(poly[idx[0]], poly[idx[1]], poly[idx[2]]);
  if (last > kAreaFloor) tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

TriMesh extrude_polygon(const std::vector<Vec2>& poly, double depth) {
  if (depth <= 0.0) throw DataError("extrusion depth must be positive");
  const auto tris2d = triangulate_polygon(poly);
  const int n = int(poly.size());

  TriMesh mesh;
  mesh.vertices.resize(2 * n, 3);
  for (int i = 0; i < n; ++i) {
    mesh.vertices.row(i) << poly[i].x(), poly[i].y(), 0.0;
    mesh.vertices.row(n + i) << poly[i].x(), poly[i].y(), depth;
  }
  for (const auto& t : tris2d) {
    mesh.triangles.push_back({t[0], t[2], t[1]});  // bottom, outward -z
    mesh.triangles.push_back({n + t[0], n + t[1], n + t[2]});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if ((poly[j] - poly[i]).norm() <= 1e-12) continue;
    mesh.triangles.push_back({i, j, n + j});
    mesh.triangles.push_back({i, n + j, n + i});
  }
  return mesh;
}

double mesh_area(const TriMesh& mesh) {
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += triangle_area3(mesh.vertices.row(t[0]), mesh.vertices.row(t[1]),
                            mesh.vertices.row(t[2]));
  }
  return total;
}

Cloud sample_mesh_surface(const TriMesh& mesh, int count, geom::Rng& rng) {
  if (count < 0) throw DataError("sample count must be nonnegative");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    total += triangle_area3(mesh.vertices.row(t[0]), mesh.vertices.row(t[1]),
                            mesh.vertices.row(t[2]));
    cumulative[i] = total;
  }
  if (total <= 0.0) throw DataError("cannot sample a zero-area mesh");

  Cloud out(count, 3);
  for (int k = 0; k < count; ++k) {
    const double target = rng.u01() * total;
    const size_t ti = std::min(
        size_t(std::lower_bound(cumulative.begin(), cumulative.end(), target) -
               cumulative.begin()),
        mesh.triangles.size() - 1);
    const auto& t = mesh.triangles[ti];
    const Vec3 a = mesh.vertices.row(t[0]);
    const Vec3 b = mesh.vertices.row(t[1]);
    const Vec3 c = mesh.vertices.row(t[2]);
    double u = rng.u01();
    double v = rng.u01();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    out.row(k) = (a + u * (b - a) + v * (c - a)).transpose();
  }
  return out;
}

std::vector<int> area_weighted_counts(const std::vector<double>& areas, int total_budget) {
  const double total = std::accumulate(areas.begin(), areas.end(), 0.0);
  if (total <= 0.0) throw DataError("total area must be positive");
  const int n = int(areas.size());
  std::vector<int> counts(n);
  std::vector<std::pair<double, int>> remainders(n);
  int assigned = 0;
  for (int i = 0; i < n; ++i) {
    if (areas[i] < 0.0) throw DataError("negative area");
    const double exact = total_budget * areas[i] / total;
    counts[i] = int(std::floor(exact));
    remainders[i] = {exact - counts[i], i};
    assigned += counts[i];
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; k < total_budget - assigned; ++k) counts[remainders[k].second] += 1;
  return counts;
}

std::vector<Cloud> sample_fragment_points(const std::vector<TriMesh>& parts, int total_budget,
                                          geom::Rng& rng) {
  std::vector<double> areas;
  areas.reserve(parts.size());
  for (const auto& m : parts) {
    const double a = mesh_area(m);
    if (a <= 0.0) throw DataError("cannot sample a zero-area part");
    areas.push_back(a);
  }
  const auto counts = area_weighted_counts(areas, total_budget);
  std::vector<Cloud> out;
  out.reserve(parts.size());
  for (size_t i = 0; i < parts.size(); ++i) {
    out.push_back(sample_mesh_surface(parts[i], counts[i], rng));
  }
  return out;
}

}  // namespace cm::data
