#include "copnet/synth.hpp"

#include <cmath>

#include "copnet/labelling.hpp"
#include "copnet/rng.hpp"

namespace copnet {

void SynthConfig::validate() const {
    check_dims(width, height);
    if (n_cells < 1) throw std::invalid_argument("SynthConfig: n_cells must be >= 1");
    if (thickness_px < 1) throw std::invalid_argument("SynthConfig: thickness must be >= 1");
    if (!(spacing_um > 0.0)) throw std::invalid_argument("SynthConfig: spacing must be > 0");
    if (!(min_separation_um >= 0.0))
        throw std::invalid_argument("SynthConfig: min_separation must be >= 0");
}

namespace {

std::vector<SeedPoint> sample_seed_points(const SynthConfig& config, Rng& rng) {
    const double w_um = config.width * config.spacing_um;
    const double h_um = config.height * config.spacing_um;
    const double sep2 = config.min_separation_um * config.min_separation_um;

    std::vector<SeedPoint> seeds;
    seeds.reserve(std::size_t(config.n_cells));
    const int tries_per_point = 2000;
    for (int i = 0; i < config.n_cells; ++i) {
        bool placed = false;
        for (int t = 0; t < tries_per_point && !placed; ++t) {
            const SeedPoint cand{rng.uniform(0.0, w_um), rng.uniform(0.0, h_um)};
            bool ok = true;
            for (const SeedPoint& s : seeds) {
                const double dx = cand.x_um - s.x_um;
                const double dy = cand.y_um - s.y_um;
                if (dx * dx + dy * dy < sep2) { ok = false; break; }
            }
            if (ok) {
                seeds.push_back(cand);
                placed = true;
            }
        }
        if (!placed)
            throw std::runtime_error(
                "voronoi_tissue: seed-point separation constraint unsatisfiable (placed " +
                std::to_string(seeds.size()) + " of " + std::to_string(config.n_cells) + ")");
    }
    return seeds;
}

// Wall pixels sit on the higher-labelled side of every boundary, then get
// dilated to the requested thickness; this keeps every boundary sealed
// against 4-connected leaks for any thickness >= 1.
BinaryMask rasterize_walls(const LabelMap& raw, int thickness_px) {
    const int w = raw.width;
    const int h = raw.height;
    BinaryMask walls(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint32_t label = raw.at(x, y);
            const bool higher_side =
                (x > 0 && raw.at(x - 1, y) < label) || (x < w - 1 && raw.at(x + 1, y) < label) ||
                (y > 0 && raw.at(x, y - 1) < label) || (y < h - 1 && raw.at(x, y + 1) < label);
            if (higher_side) walls.at(x, y) = 1;
        }
    }

    const int dilate_r = (thickness_px - 1) / 2;
    if (dilate_r > 0) {
        BinaryMask fat(w, h);
        const double limit = (dilate_r + 0.5) * (dilate_r + 0.5);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!walls.at(x, y)) continue;
                for (int dy = -dilate_r; dy <= dilate_r; ++dy) {
                    for (int dx = -dilate_r; dx <= dilate_r; ++dx) {
                        if (dx * dx + dy * dy > limit) continue;
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (nx >= 0 && nx < w && ny >= 0 && ny < h) fat.at(nx, ny) = 1;
                    }
                }
            }
        }
        walls = std::move(fat);
    }

    const int frame = (thickness_px + 1) / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (x < frame || y < frame || x >= w - frame || y >= h - frame) walls.at(x, y) = 1;
    return walls;
}

}  // namespace

SynthTissue voronoi_tissue_from_seeds(const SynthConfig& config,
                                      const std::vector<SeedPoint>& seeds) {
    config.validate();
    if (seeds.empty()) throw std::invalid_argument("voronoi_tissue: no seed points");

    const int w = config.width;
    const int h = config.height;
    LabelMap raw(w, h);
    for (int y = 0; y < h; ++y) {
        const double py = (y + 0.5) * config.spacing_um;
        for (int x = 0; x < w; ++x) {
            const double px = (x + 0.5) * config.spacing_um;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_label = 1;
            for (std::size_t i = 0; i < seeds.size(); ++i) {
                const double dx = px - seeds[i].x_um;
                const double dy = py - seeds[i].y_um;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best) {
                    best = d2;
                    best_label = std::uint32_t(i + 1);
                }
            }
            raw.at(x, y) = best_label;
        }
    }

    SynthTissue tissue;
    tissue.contours = rasterize_walls(raw, config.thickness_px);
    tissue.cells = raw;
    for (std::size_t i = 0; i < tissue.cells.labels.size(); ++i)
        if (tissue.contours.bits[i]) tissue.cells.labels[i] = 0;
    tissue.seeds = seeds;
    return tissue;
}

SynthTissue voronoi_tissue(const SynthConfig& config) {
    config.validate();
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Rng rng = Rng::stream(config.seed, std::uint64_t(attempt));
        SynthTissue tissue;
        try {
            tissue = voronoi_tissue_from_seeds(config, sample_seed_points(config, rng));
        } catch (const std::runtime_error&) {
            if (attempt + 1 == config.max_attempts) throw;
            continue;
        }

        // Construction contract: default labelling of the contour map must
        // recover each cell as one component.
        LabelConfig check;
        const LabelMap recovered = label_cells(to_field(tissue.contours, config.spacing_um), check);
        bool ok = recovered.max_label() == std::uint32_t(config.n_cells);
        if (ok) {
            // Every recovered component must lie inside one raw cell.
            std::vector<std::uint32_t> owner(std::size_t(config.n_cells) + 1, 0);
            for (std::size_t i = 0; i < recovered.labels.size() && ok; ++i) {
                const std::uint32_t r = recovered.labels[i];
                if (r == 0) continue;
                const std::uint32_t cell = tissue.cells.labels[i];
                if (cell == 0) { ok = false; break; }
                if (owner[r] == 0) owner[r] = cell;
                else if (owner[r] != cell) ok = false;
            }
        }
        if (ok) return tissue;
    }
    throw std::runtime_error("voronoi_tissue: failed to generate a valid tessellation in " +
                             std::to_string(config.max_attempts) + " attempts");
}

}  // namespace copnet
