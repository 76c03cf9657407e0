#include "copnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace copnet {

MatchReport match_cells(const LabelMap& pred, const LabelMap& gt, double t_overlap,
                        OverlapMeasure measure) {
    check_same_dims(pred, gt, "match_cells");
    if (!(t_overlap > 0.0 && t_overlap < 1.0))
        throw std::invalid_argument("match_cells: overlap threshold must lie in (0, 1)");

    const std::uint32_t k_gt = gt.max_label();
    if (k_gt == 0) throw std::invalid_argument("match_cells: ground truth has zero cells");
    const std::uint32_t k_pred = pred.max_label();

    std::vector<std::size_t> gt_area(k_gt + 1, 0), pred_area(k_pred + 1, 0);
    std::vector<std::size_t> pred_first(k_pred + 1, std::size_t(-1));
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> inter;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const std::uint32_t g = gt.labels[i];
        const std::uint32_t p = pred.labels[i];
        if (g) ++gt_area[g];
        if (p) {
            ++pred_area[p];
            if (pred_first[p] == std::size_t(-1)) pred_first[p] = i;
        }
        if (g && p) ++inter[{g, p}];
    }

    // Best predicted partner per GT cell. Intersection ties break on the
    // partner's first pixel in raster order, which is the lower label for
    // canonically labelled maps and keeps the result invariant under
    // relabelling.
    std::vector<std::uint32_t> partner(k_gt + 1, 0);
    std::vector<std::size_t> partner_inter(k_gt + 1, 0);
    for (const auto& [pair, count] : inter) {
        const auto [g, p] = pair;
        const bool wins = count > partner_inter[g] ||
                          (count == partner_inter[g] && partner[g] != 0 &&
                           pred_first[p] < pred_first[partner[g]]);
        if (wins) {
            partner_inter[g] = count;
            partner[g] = p;
        }
    }

    std::vector<int> partner_claims(k_pred + 1, 0);
    for (std::uint32_t g = 1; g <= k_gt; ++g)
        if (partner[g]) ++partner_claims[partner[g]];

    MatchReport report;
    report.overlap_threshold = t_overlap;
    report.classes.resize(k_gt);
    for (std::uint32_t g = 1; g <= k_gt; ++g) {
        double overlap = 0.0;
        if (partner[g]) {
            const double i = double(partner_inter[g]);
            overlap = measure == OverlapMeasure::iou
                          ? i / double(gt_area[g] + pred_area[partner[g]] - partner_inter[g])
                          : i / double(gt_area[g]);
        }
        CellClass cls;
        if (overlap > t_overlap) cls = CellClass::labelled;
        else if (partner[g] && partner_claims[partner[g]] > 1) cls = CellClass::merged;
        else cls = CellClass::split;
        report.classes[g - 1] = cls;
    }

    for (CellClass c : report.classes) {
        if (c == CellClass::labelled) ++report.labelled_count;
        else if (c == CellClass::merged) ++report.merged_count;
        else ++report.split_count;
    }
    const double total = double(k_gt);
    report.labelled_pct = 100.0 * report.labelled_count / total;
    report.merged_pct = 100.0 * report.merged_count / total;
    report.split_pct = 100.0 * report.split_count / total;
    return report;
}

std::vector<Pixel> boundary(const BinaryMask& mask) {
    std::vector<Pixel> points;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == mask.width - 1 || y == mask.height - 1;
            if (edge || !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
                !mask.at(x, y + 1)) {
                points.push_back({x, y});
            }
        }
    }
    return points;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher 1D squared-distance transform.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z, int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (f[v[0]] == kInf && k == 0) {
            v[0] = q;
            continue;
        }
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const int p = v[k];
        d[q] = f[p] == kInf ? kInf : (q - p) * (q - p) + f[p];
    }
}

// Exact squared Euclidean distance to the nearest seed point.
std::vector<double> squared_edt(int width, int height, const std::vector<Pixel>& seeds) {
    std::vector<double> dist(std::size_t(width) * height, kInf);
    for (const Pixel& p : seeds) dist[std::size_t(p.y) * width + p.x] = 0.0;

    const int n_max = std::max(width, height);
    std::vector<double> f(n_max), d(n_max), z(n_max + 1);
    std::vector<int> v(n_max);

    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) f[y] = dist[std::size_t(y) * width + x];
        edt_1d(f, d, v, z, height);
        for (int y = 0; y < height; ++y) dist[std::size_t(y) * width + x] = d[y];
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) f[x] = dist[std::size_t(y) * width + x];
        edt_1d(f, d, v, z, width);
        for (int x = 0; x < width; ++x) dist[std::size_t(y) * width + x] = d[x];
    }
    return dist;
}

std::size_t count_within(const std::vector<Pixel>& points, const std::vector<double>& sq_dist,
                         int width, double tol_px) {
    const double limit = tol_px * tol_px + 1e-9;
    std::size_t count = 0;
    for (const Pixel& p : points)
        if (sq_dist[std::size_t(p.y) * width + p.x] <= limit) ++count;
    return count;
}

}  // namespace

double nsd(const BinaryMask& pred, const BinaryMask& gt, double tol_px) {
    check_same_dims(pred, gt, "nsd");
    if (!(tol_px >= 0.0)) throw std::invalid_argument("nsd: tolerance must be >= 0");

    const std::vector<Pixel> bp = boundary(pred);
    const std::vector<Pixel> bg = boundary(gt);
    if (bp.empty() && bg.empty()) return 1.0;
    if (bp.empty() || bg.empty()) return 0.0;

    const auto dist_pred = squared_edt(pred.width, pred.height, bp);
    const auto dist_gt = squared_edt(gt.width, gt.height, bg);
    const std::size_t hits =
        count_within(bg, dist_pred, pred.width, tol_px) +
        count_within(bp, dist_gt, gt.width, tol_px);
    return double(hits) / double(bp.size() + bg.size());
}

namespace {

// Neighborhood p2..p9 clockwise from north.
void zs_neighbors(const BinaryMask& m, int x, int y, int p[8]) {
    auto get = [&](int nx, int ny) -> int {
        if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) return 0;
        return m.at(nx, ny);
    };
    p[0] = get(x, y - 1);
    p[1] = get(x + 1, y - 1);
    p[2] = get(x + 1, y);
    p[3] = get(x + 1, y + 1);
    p[4] = get(x, y + 1);
    p[5] = get(x - 1, y + 1);
    p[6] = get(x - 1, y);
    p[7] = get(x - 1, y - 1);
}

}  // namespace

BinaryMask skeletonize(const BinaryMask& mask) {
    BinaryMask skel = mask;
    bool changed = true;
    std::vector<std::size_t> to_delete;
    while (changed) {
        changed = false;
        for (int phase = 0; phase < 2; ++phase) {
            to_delete.clear();
            for (int y = 0; y < skel.height; ++y) {
                for (int x = 0; x < skel.width; ++x) {
                    if (!skel.at(x, y)) continue;
                    int p[8];
                    zs_neighbors(skel, x, y, p);
                    const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
                    if (b < 2 || b > 6) continue;
                    int transitions = 0;
                    for (int i = 0; i < 8; ++i)
                        if (p[i] == 0 && p[(i + 1) % 8] == 1) ++transitions;
                    if (transitions != 1) continue;
                    // p2=p[0] N, p4=p[2] E, p6=p[4] S, p8=p[6] W
                    if (phase == 0) {
                        if (p[0] * p[2] * p[4] != 0 || p[2] * p[4] * p[6] != 0) continue;
                    } else {
                        if (p[0] * p[2] * p[6] != 0 || p[0] * p[4] * p[6] != 0) continue;
                    }
                    to_delete.push_back(std::size_t(y) * skel.width + x);
                }
            }
            if (!to_delete.empty()) changed = true;
            for (std::size_t i : to_delete) skel.bits[i] = 0;
        }
    }
    return skel;
}

double cldice(const BinaryMask& pred_contours, const BinaryMask& gt_contours) {
    check_same_dims(pred_contours, gt_contours, "cldice");

    const BinaryMask skel_pred = skeletonize(pred_contours);
    const BinaryMask skel_gt = skeletonize(gt_contours);
    const std::size_t n_pred = skel_pred.foreground_count();
    const std::size_t n_gt = skel_gt.foreground_count();
    if (n_pred == 0 && n_gt == 0) return 1.0;
    if (n_pred == 0 || n_gt == 0) return 0.0;

    std::size_t pred_in_gt = 0, gt_in_pred = 0;
    for (std::size_t i = 0; i < skel_pred.bits.size(); ++i) {
        if (skel_pred.bits[i] && gt_contours.bits[i]) ++pred_in_gt;
        if (skel_gt.bits[i] && pred_contours.bits[i]) ++gt_in_pred;
    }
    const double t_prec = double(pred_in_gt) / double(n_pred);
    const double t_sens = double(gt_in_pred) / double(n_gt);
    if (t_prec + t_sens == 0.0) return 0.0;
    return 2.0 * t_prec * t_sens / (t_prec + t_sens);
}

std::pair<double, double> interslice_cldice(std::span<const BinaryMask> stack) {
    if (stack.size() < 2)
        throw std::invalid_argument("interslice_cldice: need at least 2 slices");
    std::vector<double> scores;
    scores.reserve(stack.size() - 1);
    for (std::size_t i = 0; i + 1 < stack.size(); ++i) {
        check_same_dims(stack[i], stack[i + 1], "interslice_cldice");
        scores.push_back(cldice(stack[i], stack[i + 1]));
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    return {mean, std::sqrt(ss / scores.size())};
}

namespace {

// Midranks scaled by 2 so all rank arithmetic stays in integers.
std::vector<std::int64_t> midranks_x2(const std::vector<double>& pooled_sorted,
                                      std::span<const double> values) {
    std::vector<std::int64_t> ranks;
    ranks.reserve(values.size());
    for (double v : values) {
        const auto lo = std::lower_bound(pooled_sorted.begin(), pooled_sorted.end(), v);
        const auto hi = std::upper_bound(pooled_sorted.begin(), pooled_sorted.end(), v);
        const auto first = std::int64_t(lo - pooled_sorted.begin()) + 1;
        const auto last = std::int64_t(hi - pooled_sorted.begin());
        ranks.push_back(first + last);  // 2 * midrank
    }
    return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double choose_capped(std::int64_t n, std::int64_t k, double cap) {
    double c = 1.0;
    k = std::min(k, n - k);
    for (std::int64_t i = 1; i <= k; ++i) {
        c *= double(n - k + i) / double(i);
        if (c > cap) return cap + 1.0;
    }
    return c;
}

// Exact permutation distribution: enumerate every assignment of n of the
// pooled ranks to the first sample.
double exact_p(const std::vector<std::int64_t>& pooled_ranks_x2, std::size_t n,
               std::int64_t u2_obs, Alternative alternative) {
    const std::size_t total = pooled_ranks_x2.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    const std::int64_t base = std::int64_t(n) * std::int64_t(n + 1);
    std::uint64_t favorable = 0, count = 0;
    for (;;) {
        std::int64_t r2 = 0;
        for (std::size_t i : idx) r2 += pooled_ranks_x2[i];
        const std::int64_t u2 = r2 - base;  // 2 * U for this assignment
        if (alternative == Alternative::greater ? u2 >= u2_obs : u2 <= u2_obs) ++favorable;
        ++count;

        // next combination
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (idx[i] != i + total - n) break;
            if (i == 0) return double(favorable) / double(count);
        }
        if (idx[i] == i + total - n) return double(favorable) / double(count);
        ++idx[i];
        for (std::size_t j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 Alternative alternative, PValueMethod method) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("mann_whitney_u: samples must be non-empty");

    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());

    const std::vector<std::int64_t> ranks_a = midranks_x2(pooled, a);
    const std::int64_t r2_a = std::accumulate(ranks_a.begin(), ranks_a.end(), std::int64_t(0));
    const std::int64_t u2 = r2_a - std::int64_t(n) * std::int64_t(n + 1);  // 2 * U

    MannWhitneyResult result;
    result.u = double(u2) / 2.0;

    bool use_exact = method == PValueMethod::exact;
    if (method == PValueMethod::automatic)
        use_exact = choose_capped(std::int64_t(n + m), std::int64_t(n), 1e4) <= 1e4;

    if (use_exact) {
        const std::vector<std::int64_t> pooled_ranks = midranks_x2(pooled, pooled);
        result.p = exact_p(pooled_ranks, n, u2, alternative);
        result.exact = true;
        return result;
    }

    // Normal approximation with tie-corrected variance and continuity
    // correction.
    const double nn = double(n), mm = double(m), big_n = nn + mm;
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = double(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double mu = nn * mm / 2.0;
    const double var =
        nn * mm / 12.0 * ((big_n + 1.0) - tie_sum / (big_n * (big_n - 1.0)));
    const double u_stat = double(u2) / 2.0;
    if (var <= 0.0) {
        result.p = 1.0;  // all observations tied: U is deterministic
        return result;
    }
    const double sd = std::sqrt(var);
    if (alternative == Alternative::greater)
        result.p = normal_sf((u_stat - mu - 0.5) / sd);
    else
        result.p = 1.0 - normal_sf((u_stat - mu + 0.5) / sd);
    return result;
}

}  // namespace copnet
