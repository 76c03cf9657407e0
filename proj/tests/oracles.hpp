#pragma once

// Independent brute-force reference implementations used to derive and
// cross-check expected values. These deliberately share no code with the
// library implementations they verify.

#include <vector>

#include "copnet/field.hpp"
#include "copnet/metrics.hpp"

namespace oracles {

// Flood-fill connected components, labels in row-major discovery order.
copnet::LabelMap flood_fill_components(const copnet::BinaryMask& mask, int connectivity);

// All-pairs boundary distances.
double brute_force_nsd(const copnet::BinaryMask& pred, const copnet::BinaryMask& gt,
                       double tol_px);

// Zhang-Suen thinning by direct rule application.
copnet::BinaryMask thinning_by_rules(const copnet::BinaryMask& mask);

// Centerline Dice from scratch (uses thinning_by_rules).
double cldice_formula(const copnet::BinaryMask& pred, const copnet::BinaryMask& gt);

struct MatchCounts {
    int labelled = 0;
    int merged = 0;
    int split = 0;
};

// Cell matching from the definition, via explicit per-cell pixel sets.
MatchCounts match_by_definition(const copnet::LabelMap& pred, const copnet::LabelMap& gt,
                                double t_overlap, bool intersection_over_gt = false);

// Exact one-sided Mann-Whitney p by recursive enumeration of every
// assignment of pooled observations to the first sample.
double mann_whitney_exact_enumeration(const std::vector<double>& a,
                                      const std::vector<double>& b, bool greater);

// Forward-Euler integration of du/dt = div(alpha grad u) - beta u with the
// same face-averaged zero-flux stencil, for cross-checking the implicit
// time scheme.
copnet::Field2D explicit_euler(const copnet::Field2D& u0, const copnet::Field2D& alpha,
                               const copnet::Field2D& beta, double total_time, double dt);

// Direct max-then-min disk filter.
copnet::Field2D closing_by_scan(const copnet::Field2D& f, int radius_px);

}  // namespace oracles
