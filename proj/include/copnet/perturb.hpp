#pragma once

#include <span>
#include <vector>

#include "copnet/field.hpp"
#include "copnet/rng.hpp"

namespace copnet {

// Circular perturbation site: tent kernel max(0, 1 - |x - c|/R) of unit
// peak, in physical coordinates.
struct PerturbSite {
    double cx_um = 0.0;
    double cy_um = 0.0;
    double radius_um = 1.0;
};

struct DegradeConfig {
    int n1 = 6;              // local diffusion sites
    int n2 = 10;             // local drop sites
    double d_min = 0.1;      // um^2/s
    double d_max = 1.0;      // um^2/s
    double r_min = 2.0;      // um
    double r_max = 7.0;      // um
    double total_time = 1.0; // s
    double dt = 0.05;        // s
    std::uint64_t seed = 1;

    // Tent sums are clamped at 1 before scaling so alpha stays within
    // [d_min, d_max] and beta within [0, 1] even when sites overlap.
    bool clamp_tents = true;
    // Radii are drawn from the integer-um set {r_min..r_max}; disable for
    // continuous-uniform radii.
    bool integer_radii = true;

    void validate() const;
};

std::vector<PerturbSite> sample_sites(const DegradeConfig& config, int count,
                                      double domain_w_um, double domain_h_um, Rng& rng);

double tent_sum(std::span<const PerturbSite> sites, double x_um, double y_um);

// Rasterized alpha(x) = d_min + (d_max - d_min) * min(1, tent_sum) and
// beta(x) = min(1, tent_sum), given explicit site lists.
Field2D alpha_from_sites(std::span<const PerturbSite> sites, const DegradeConfig& config,
                         int width, int height, double spacing_um);
Field2D beta_from_sites(std::span<const PerturbSite> sites, const DegradeConfig& config,
                        int width, int height, double spacing_um);

// Draw N1 (resp. N2) sites from the stream and rasterize. Calling
// gen_alpha then gen_beta on the same stream consumes sites 1..N1 and
// N1+1..N1+N2 in order.
Field2D gen_alpha(const DegradeConfig& config, int width, int height, double spacing_um,
                  Rng& rng);
Field2D gen_beta(const DegradeConfig& config, int width, int height, double spacing_um,
                 Rng& rng);

enum class HoleCenters { uniform_domain, uniform_contour };

// Removes contour pixels inside each sampled disk. Centers default to
// uniform over the domain; uniform_contour draws them from the mask's
// foreground pixels instead.
BinaryMask punch_holes(const BinaryMask& mask, int n_holes, double r_lo_um, double r_hi_um,
                       double spacing_um, Rng& rng,
                       HoleCenters centers = HoleCenters::uniform_domain);

// Explicit-site variant for constructed degradation scenarios.
BinaryMask punch_holes(const BinaryMask& mask, std::span<const PerturbSite> holes,
                       double spacing_um);

}  // namespace copnet
