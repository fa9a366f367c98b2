#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cm/geom/types.hpp"

namespace cm::data {

struct PlyCloud {
  Cloud points;
  std::vector<uint8_t> mating;  // one flag per point
};

// ASCII PLY with double x/y/z and a uchar mating flag per vertex. Coordinates
// are written with 17 significant digits so a read round-trips bitwise.
void write_ply(const std::filesystem::path& path, const Cloud& points,
               const std::vector<uint8_t>& mating);

// Throws ParseError naming the file and 1-based line of the first defect.
PlyCloud read_ply(const std::filesystem::path& path);

}  // namespace cm::data
