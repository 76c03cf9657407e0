#include "copnet/labelling.hpp"

#include <numeric>

#include "copnet/preprocess.hpp"

namespace copnet {

void LabelConfig::validate() const {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("LabelConfig: theta must lie in (0, 1)");
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("LabelConfig: connectivity must be 4 or 8");
    if (min_area_px < 0) throw std::invalid_argument("LabelConfig: min_area_px must be >= 0");
}

namespace {

struct DisjointSet {
    std::vector<std::uint32_t> parent;

    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0u);
    }

    std::uint32_t find(std::uint32_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }

    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a; else parent[a] = b;
    }
};

}  // namespace

LabelMap connected_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("connected_components: connectivity must be 4 or 8");

    const int w = mask.width;
    const int h = mask.height;
    LabelMap out(w, h);

    // First pass: provisional labels, merging with already-scanned neighbors.
    std::vector<std::uint32_t> provisional(mask.pixel_count(), 0);
    DisjointSet ds(mask.pixel_count() / 2 + 2);
    std::uint32_t next = 1;

    auto visit = [&](int x, int y, std::uint32_t& label, int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w) return;
        const std::uint32_t n = provisional[std::size_t(ny) * w + nx];
        if (n == 0) return;
        if (label == 0) label = n;
        else ds.unite(label, n);
        (void)x; (void)y;
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            std::uint32_t label = 0;
            visit(x, y, label, x - 1, y);
            visit(x, y, label, x, y - 1);
            if (connectivity == 8) {
                visit(x, y, label, x - 1, y - 1);
                visit(x, y, label, x + 1, y - 1);
            }
            if (label == 0) {
                label = next++;
                if (label >= ds.parent.size()) ds.parent.push_back(label);
            }
            provisional[std::size_t(y) * w + x] = label;
        }
    }

    // Second pass: map roots to consecutive labels in first-encounter order.
    std::vector<std::uint32_t> compact(next, 0);
    std::uint32_t k = 0;
    for (std::size_t i = 0; i < provisional.size(); ++i) {
        if (provisional[i] == 0) continue;
        const std::uint32_t root = ds.find(provisional[i]);
        if (compact[root] == 0) compact[root] = ++k;
        out.labels[i] = compact[root];
    }
    return out;
}

LabelMap label_cells(const Field2D& contour, const LabelConfig& config) {
    config.validate();
    if (config.exclusion)
        check_same_dims(contour, *config.exclusion, "label_cells exclusion mask");

    const BinaryMask contour_mask = binarize(contour, config.theta);
    BinaryMask region(contour.width, contour.height);
    for (std::size_t i = 0; i < region.bits.size(); ++i) {
        const bool excluded = config.exclusion && config.exclusion->bits[i];
        region.bits[i] = (!contour_mask.bits[i] && !excluded) ? 1 : 0;
    }

    LabelMap raw = connected_components(region, config.connectivity);
    const std::uint32_t k = raw.max_label();
    if (k == 0 || config.min_area_px == 0) return raw;

    std::vector<std::size_t> area(k + 1, 0);
    for (std::uint32_t v : raw.labels) ++area[v];

    // Relabel surviving components consecutively, preserving order.
    std::vector<std::uint32_t> remap(k + 1, 0);
    std::uint32_t kept = 0;
    for (std::uint32_t label = 1; label <= k; ++label)
        if (area[label] >= std::size_t(config.min_area_px)) remap[label] = ++kept;
    for (std::uint32_t& v : raw.labels) v = remap[v];
    return raw;
}

}  // namespace copnet
