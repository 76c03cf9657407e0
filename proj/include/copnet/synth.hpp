#pragma once

#include <vector>

#include "copnet/field.hpp"

namespace copnet {

struct SynthConfig {
    int n_cells = 100;
    double min_separation_um = 4.0;  // between Voronoi seed points
    int thickness_px = 3;            // contour thickness
    int width = 512;
    int height = 512;
    double spacing_um = 90.0 / 512.0;
    std::uint64_t seed = 1;
    int max_attempts = 64;  // full regeneration attempts

    void validate() const;
};

struct SeedPoint {
    double x_um = 0.0;
    double y_um = 0.0;
};

struct SynthTissue {
    BinaryMask contours;  // cell walls plus the image border frame
    LabelMap cells;       // Voronoi regions, contour pixels excluded
    std::vector<SeedPoint> seeds;
};

// Voronoi tessellation of randomly placed seed points. Guarantees that
// labelling the contour map (theta 0.5, 4-connectivity, default minimum
// area) recovers exactly n_cells components; regenerates with a fresh
// sub-seed when a degenerate tessellation violates that, and throws once
// max_attempts is exhausted.
SynthTissue voronoi_tissue(const SynthConfig& config);

// Deterministic rasterization for caller-supplied seed points.
SynthTissue voronoi_tissue_from_seeds(const SynthConfig& config,
                                      const std::vector<SeedPoint>& seeds);

}  // namespace copnet
