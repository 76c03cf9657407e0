#include "copnet/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace copnet {

void DegradeConfig::validate() const {
    if (n1 < 0 || n2 < 0)
        throw std::invalid_argument("DegradeConfig: site counts must be >= 0");
    if (!(d_min >= 0.0) || !(d_max >= d_min))
        throw std::invalid_argument("DegradeConfig: need 0 <= d_min <= d_max");
    if (!(r_min > 0.0) || !(r_max >= r_min))
        throw std::invalid_argument("DegradeConfig: need 0 < r_min <= r_max");
    if (!(dt > 0.0) || !(total_time >= dt))
        throw std::invalid_argument("DegradeConfig: need 0 < dt <= total_time");
}

std::vector<PerturbSite> sample_sites(const DegradeConfig& config, int count,
                                      double domain_w_um, double domain_h_um, Rng& rng) {
    if (count < 0) throw std::invalid_argument("sample_sites: count must be >= 0");
    if (config.r_min > config.r_max)
        throw std::invalid_argument("sample_sites: r_min > r_max");

    std::vector<PerturbSite> sites;
    sites.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        PerturbSite site;
        site.cx_um = rng.uniform(0.0, domain_w_um);
        site.cy_um = rng.uniform(0.0, domain_h_um);
        if (config.integer_radii) {
            const auto lo = std::int64_t(std::ceil(config.r_min));
            const auto hi = std::int64_t(std::floor(config.r_max));
            site.radius_um = lo > hi ? config.r_min : double(rng.uniform_int(lo, hi));
        } else {
            site.radius_um = rng.uniform(config.r_min, config.r_max);
        }
        sites.push_back(site);
    }
    return sites;
}

double tent_sum(std::span<const PerturbSite> sites, double x_um, double y_um) {
    double sum = 0.0;
    for (const PerturbSite& s : sites) {
        const double dx = x_um - s.cx_um;
        const double dy = y_um - s.cy_um;
        const double d = std::sqrt(dx * dx + dy * dy);
        sum += std::max(0.0, 1.0 - d / s.radius_um);
    }
    return sum;
}

namespace {

// Adds each site's tent to the accumulator, visiting only the pixels its
// support can reach.
void accumulate_tents(Field2D& acc, std::span<const PerturbSite> sites) {
    const double h = acc.spacing;
    for (const PerturbSite& s : sites) {
        const int x0 = std::max(0, int(std::floor((s.cx_um - s.radius_um) / h - 0.5)));
        const int x1 = std::min(acc.width - 1, int(std::ceil((s.cx_um + s.radius_um) / h - 0.5)));
        const int y0 = std::max(0, int(std::floor((s.cy_um - s.radius_um) / h - 0.5)));
        const int y1 = std::min(acc.height - 1, int(std::ceil((s.cy_um + s.radius_um) / h - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            const double py = (y + 0.5) * h;
            for (int x = x0; x <= x1; ++x) {
                const double px = (x + 0.5) * h;
                const double dx = px - s.cx_um;
                const double dy = py - s.cy_um;
                const double d = std::sqrt(dx * dx + dy * dy);
                if (d < s.radius_um) acc.at(x, y) += 1.0 - d / s.radius_um;
            }
        }
    }
}

}  // namespace

Field2D alpha_from_sites(std::span<const PerturbSite> sites, const DegradeConfig& config,
                         int width, int height, double spacing_um) {
    Field2D acc(width, height, spacing_um, 0.0);
    accumulate_tents(acc, sites);
    for (double& v : acc.values) {
        const double s = config.clamp_tents ? std::min(1.0, v) : v;
        v = config.d_min + (config.d_max - config.d_min) * s;
    }
    return acc;
}

Field2D beta_from_sites(std::span<const PerturbSite> sites, const DegradeConfig& config,
                        int width, int height, double spacing_um) {
    Field2D acc(width, height, spacing_um, 0.0);
    accumulate_tents(acc, sites);
    if (config.clamp_tents)
        for (double& v : acc.values) v = std::min(1.0, v);
    return acc;
}

Field2D gen_alpha(const DegradeConfig& config, int width, int height, double spacing_um,
                  Rng& rng) {
    config.validate();
    const auto sites =
        sample_sites(config, config.n1, width * spacing_um, height * spacing_um, rng);
    return alpha_from_sites(sites, config, width, height, spacing_um);
}

Field2D gen_beta(const DegradeConfig& config, int width, int height, double spacing_um,
                 Rng& rng) {
    config.validate();
    const auto sites =
        sample_sites(config, config.n2, width * spacing_um, height * spacing_um, rng);
    return beta_from_sites(sites, config, width, height, spacing_um);
}

BinaryMask punch_holes(const BinaryMask& mask, std::span<const PerturbSite> holes,
                       double spacing_um) {
    BinaryMask out = mask;
    const double h = spacing_um;
    for (const PerturbSite& hole : holes) {
        const int x0 = std::max(0, int(std::floor((hole.cx_um - hole.radius_um) / h - 0.5)));
        const int x1 =
            std::min(out.width - 1, int(std::ceil((hole.cx_um + hole.radius_um) / h - 0.5)));
        const int y0 = std::max(0, int(std::floor((hole.cy_um - hole.radius_um) / h - 0.5)));
        const int y1 =
            std::min(out.height - 1, int(std::ceil((hole.cy_um + hole.radius_um) / h - 0.5)));
        const double r2 = hole.radius_um * hole.radius_um;
        for (int y = y0; y <= y1; ++y) {
            const double dy = (y + 0.5) * h - hole.cy_um;
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5) * h - hole.cx_um;
                if (dx * dx + dy * dy <= r2) out.at(x, y) = 0;
            }
        }
    }
    return out;
}

BinaryMask punch_holes(const BinaryMask& mask, int n_holes, double r_lo_um, double r_hi_um,
                       double spacing_um, Rng& rng, HoleCenters centers) {
    if (n_holes < 0) throw std::invalid_argument("punch_holes: n_holes must be >= 0");
    if (!(r_lo_um <= r_hi_um)) throw std::invalid_argument("punch_holes: r_lo > r_hi");

    std::vector<std::size_t> contour_pixels;
    if (centers == HoleCenters::uniform_contour) {
        for (std::size_t i = 0; i < mask.bits.size(); ++i)
            if (mask.bits[i]) contour_pixels.push_back(i);
        if (contour_pixels.empty()) return mask;
    }

    std::vector<PerturbSite> holes;
    holes.reserve(std::size_t(n_holes));
    for (int i = 0; i < n_holes; ++i) {
        PerturbSite hole;
        if (centers == HoleCenters::uniform_domain) {
            hole.cx_um = rng.uniform(0.0, mask.width * spacing_um);
            hole.cy_um = rng.uniform(0.0, mask.height * spacing_um);
        } else {
            const auto pick = std::size_t(
                rng.uniform_int(0, std::int64_t(contour_pixels.size()) - 1));
            const std::size_t idx = contour_pixels[pick];
            hole.cx_um = (double(idx % std::size_t(mask.width)) + 0.5) * spacing_um;
            hole.cy_um = (double(idx / std::size_t(mask.width)) + 0.5) * spacing_um;
        }
        hole.radius_um = rng.uniform(r_lo_um, r_hi_um);
        holes.push_back(hole);
    }
    return punch_holes(mask, holes, spacing_um);
}

}  // namespace copnet
