#pragma once

#include <filesystem>
#include <variant>

#include "copnet/field.hpp"

namespace copnet {

// Binary PGM (P5). Masks are written with maxval 255 (samples 0/255),
// label maps with maxval 65535 (16-bit big-endian samples). On read, a
// maxval-255 file whose samples are all 0 or 255 decodes as a BinaryMask;
// anything else decodes as a LabelMap with samples taken verbatim.
std::variant<BinaryMask, LabelMap> read_pgm(const std::filesystem::path& path);

BinaryMask read_pgm_mask(const std::filesystem::path& path);
LabelMap read_pgm_labels(const std::filesystem::path& path);

void write_pgm(const BinaryMask& mask, const std::filesystem::path& path);
void write_pgm(const LabelMap& labels, const std::filesystem::path& path);

}  // namespace copnet
