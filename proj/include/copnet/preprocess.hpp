#pragma once

#include "copnet/field.hpp"

namespace copnet {

// Slice-wise intensity standardization: output has mean 0 and population
// standard deviation 1. A constant slice maps to all zeros.
Field2D zscore_slice(const Field2D& field);

enum class ResizeMode { bilinear, nearest };

// Corner-aligned resampling. The physical spacing is rescaled by the
// width ratio, keeping the in-plane field of view fixed.
Field2D resize(const Field2D& field, int target_w, int target_h, ResizeMode mode);
BinaryMask resize(const BinaryMask& mask, int target_w, int target_h,
                  ResizeMode mode = ResizeMode::nearest);
LabelMap resize(const LabelMap& labels, int target_w, int target_h,
                ResizeMode mode = ResizeMode::nearest);

// output(x) = 1 iff field(x) >= theta.
BinaryMask binarize(const Field2D& field, double theta);

}  // namespace copnet
