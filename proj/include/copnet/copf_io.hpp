#pragma once

#include <filesystem>

#include "copnet/field.hpp"

namespace copnet {

// COPF v1, the raw float-raster exchange format used for probability maps
// and external closing backends:
//   "COPF" | version u8 = 1 | width u32 LE | height u32 LE |
//   spacing f32 LE (um/px) | width*height f32 LE samples, row-major.
Field2D read_copf(const std::filesystem::path& path);
void write_copf(const Field2D& field, const std::filesystem::path& path);

}  // namespace copnet
