#pragma once

#include <optional>

#include "copnet/field.hpp"

namespace copnet {

struct LabelConfig {
    double theta = 0.5;  // binarization threshold for the contour map
    int connectivity = 4;
    int min_area_px = 64;  // components below this area merge into label 0
    std::optional<BinaryMask> exclusion;  // e.g. blood capillaries / haemorrhagic zones

    void validate() const;
};

// Two-pass union-find labelling. Labels are assigned 1..K in row-major
// order of each component's first pixel.
LabelMap connected_components(const BinaryMask& mask, int connectivity);

// Cells are the connected components of the complement of the binarized
// contour map, minus the exclusion mask; small components become label 0.
LabelMap label_cells(const Field2D& contour, const LabelConfig& config);

}  // namespace copnet
