#pragma once

#include <span>
#include <utility>
#include <vector>

#include "copnet/field.hpp"

namespace copnet {

enum class CellClass { labelled, merged, split };
enum class OverlapMeasure { iou, intersection_over_gt };

struct MatchReport {
    std::vector<CellClass> classes;  // indexed by GT label - 1
    int labelled_count = 0;
    int merged_count = 0;
    int split_count = 0;
    double labelled_pct = 0.0;
    double merged_pct = 0.0;
    double split_pct = 0.0;
    double overlap_threshold = 0.85;
};

// Classifies every GT cell: labelled when its best-overlap predicted cell
// exceeds the overlap threshold, merged when that partner is shared with
// another GT cell, split otherwise. The three classes partition GT cells.
MatchReport match_cells(const LabelMap& pred, const LabelMap& gt, double t_overlap = 0.85,
                        OverlapMeasure measure = OverlapMeasure::iou);

struct Pixel {
    int x = 0;
    int y = 0;
};

// Mask pixels with a 4-neighbor outside the mask or on the image border.
std::vector<Pixel> boundary(const BinaryMask& mask);

// Normalized surface distance: the fraction of boundary points of either
// mask lying within tol_px (Euclidean) of the other's boundary. Both
// boundaries empty counts as perfect agreement.
double nsd(const BinaryMask& pred, const BinaryMask& gt, double tol_px = 2.0);

// Zhang-Suen thinning to fixpoint.
BinaryMask skeletonize(const BinaryMask& mask);

// Centerline Dice: harmonic mean of skeleton-in-mask precision and
// sensitivity.
double cldice(const BinaryMask& pred_contours, const BinaryMask& gt_contours);

// clDice between consecutive slices: (mean, population std).
std::pair<double, double> interslice_cldice(std::span<const BinaryMask> stack);

enum class Alternative { greater, less };
enum class PValueMethod { automatic, exact, normal };

struct MannWhitneyResult {
    double u = 0.0;  // U statistic of the first sample, with midrank ties
    double p = 1.0;  // one-sided p-value
    bool exact = false;
};

// One-sided Mann-Whitney U test. The automatic method enumerates the
// permutation distribution when C(n+m, n) <= 10^4 and otherwise uses the
// tie-corrected normal approximation with continuity correction.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 Alternative alternative,
                                 PValueMethod method = PValueMethod::automatic);

}  // namespace copnet
