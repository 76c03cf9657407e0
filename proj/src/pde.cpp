#include "copnet/pde.hpp"

#include <cmath>

namespace copnet {

namespace {

// out = u + sign * (dt/2) * (-L u + beta u), shared by both half-step
// operators (sign = +1 implicit, -1 explicit).
void apply_half_step(const PdeSystem& sys, double sign, std::span<const double> u,
                     std::span<double> out) {
    const int w = sys.width;
    const int h = sys.height;
    const double c = sign * sys.dt * 0.5;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            double flux = 0.0;
            if (x > 0) flux += sys.face_x[std::size_t(y) * (w - 1) + x - 1] * (u[i - 1] - u[i]);
            if (x < w - 1) flux += sys.face_x[std::size_t(y) * (w - 1) + x] * (u[i + 1] - u[i]);
            if (y > 0) flux += sys.face_y[i - w] * (u[i - w] - u[i]);
            if (y < h - 1) flux += sys.face_y[i] * (u[i + w] - u[i]);
            out[i] = u[i] + c * (sys.beta[i] * u[i] - flux);
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

void PdeSystem::apply_implicit(std::span<const double> u, std::span<double> out) const {
    apply_half_step(*this, +1.0, u, out);
}

void PdeSystem::apply_explicit(std::span<const double> u, std::span<double> out) const {
    apply_half_step(*this, -1.0, u, out);
}

PdeSystem build_system(const Field2D& alpha, const Field2D& beta, double dt) {
    check_same_dims(alpha, beta, "build_system");
    if (!(dt > 0.0)) throw std::invalid_argument("build_system: dt must be > 0");
    for (double a : alpha.values)
        if (!(a >= 0.0)) throw std::invalid_argument("build_system: alpha must be >= 0");
    for (double b : beta.values)
        if (!(b >= 0.0)) throw std::invalid_argument("build_system: beta must be >= 0");

    PdeSystem sys;
    sys.width = alpha.width;
    sys.height = alpha.height;
    sys.spacing = alpha.spacing;
    sys.dt = dt;
    sys.beta = beta.values;

    const double inv_h2 = 1.0 / (alpha.spacing * alpha.spacing);
    const int w = sys.width;
    const int h = sys.height;
    sys.face_x.assign(std::size_t(std::max(w - 1, 0)) * h, 0.0);
    sys.face_y.assign(std::size_t(w) * std::max(h - 1, 0), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x)
            sys.face_x[std::size_t(y) * (w - 1) + x] =
                0.5 * (alpha.at(x, y) + alpha.at(x + 1, y)) * inv_h2;
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x)
            sys.face_y[std::size_t(y) * w + x] =
                0.5 * (alpha.at(x, y) + alpha.at(x, y + 1)) * inv_h2;
    return sys;
}

Field2D step(const Field2D& u, const PdeSystem& sys) {
    check_same_dims(u.width, u.height, sys.width, sys.height, "step");
    const std::size_t n = u.pixel_count();

    std::vector<double> b(n);
    sys.apply_explicit(u.values, b);
    const double b_norm = std::sqrt(dot(b, b));

    Field2D result(u.width, u.height, u.spacing, 0.0, u.role);
    std::vector<double>& x = result.values;
    x = u.values;  // warm start at the previous state

    std::vector<double> r(n), z(n), p(n), ap(n);
    sys.apply_implicit(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

    // Jacobi preconditioner: diagonal of the implicit operator.
    std::vector<double> inv_diag(n);
    const int w = sys.width;
    const int h = sys.height;
    for (int y = 0; y < h; ++y) {
        for (int x2 = 0; x2 < w; ++x2) {
            const std::size_t i = std::size_t(y) * w + x2;
            double off = 0.0;
            if (x2 > 0) off += sys.face_x[std::size_t(y) * (w - 1) + x2 - 1];
            if (x2 < w - 1) off += sys.face_x[std::size_t(y) * (w - 1) + x2];
            if (y > 0) off += sys.face_y[i - w];
            if (y < h - 1) off += sys.face_y[i];
            inv_diag[i] = 1.0 / (1.0 + sys.dt * 0.5 * (sys.beta[i] + off));
        }
    }

    const double threshold = sys.solver_tol * (b_norm > 0.0 ? b_norm : 1.0);
    double r_norm = std::sqrt(dot(r, r));
    if (r_norm <= threshold) return result;

    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);

    for (int iter = 0; iter < sys.solver_max_iters; ++iter) {
        sys.apply_implicit(p, ap);
        const double alpha_k = rz / dot(p, ap);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha_k * p[i];
            r[i] -= alpha_k * ap[i];
        }
        r_norm = std::sqrt(dot(r, r));
        if (r_norm <= threshold) return result;
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = dot(r, z);
        const double beta_k = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta_k * p[i];
    }
    throw std::runtime_error("step: conjugate gradient did not converge within " +
                             std::to_string(sys.solver_max_iters) + " iterations");
}

Field2D evolve(const Field2D& u0, const Field2D& alpha, const Field2D& beta, double total_time,
               double dt) {
    check_same_dims(u0, alpha, "evolve");
    if (!(total_time > 0.0)) throw std::invalid_argument("evolve: total_time must be > 0");

    const auto n_full = std::int64_t(std::floor(total_time / dt + 1e-9));
    const double remainder = total_time - double(n_full) * dt;

    Field2D u = u0;
    if (n_full > 0) {
        const PdeSystem sys = build_system(alpha, beta, dt);
        for (std::int64_t k = 0; k < n_full; ++k) u = step(u, sys);
    }
    if (remainder > 1e-9 * total_time) {
        const PdeSystem sys = build_system(alpha, beta, remainder);
        u = step(u, sys);
    }
    return u;
}

Field2D degrade(const Field2D& u0, const Field2D& alpha, const Field2D& beta, double total_time,
                double dt) {
    validate_probability(u0, "degrade");
    return clamp01(evolve(u0, alpha, beta, total_time, dt));
}

std::pair<Field2D, BinaryMask> simulate_training_pair(const BinaryMask& gt_mask,
                                                      const DegradeConfig& config,
                                                      double spacing_um,
                                                      std::uint64_t slice_index,
                                                      std::uint64_t repetition) {
    config.validate();
    Rng rng = Rng::stream(config.seed, slice_index, repetition);
    const Field2D u0 = to_field(gt_mask, spacing_um);
    const Field2D alpha = gen_alpha(config, u0.width, u0.height, spacing_um, rng);
    const Field2D beta = gen_beta(config, u0.width, u0.height, spacing_um, rng);
    Field2D degraded = degrade(u0, alpha, beta, config.total_time, config.dt);
    return {std::move(degraded), gt_mask};
}

}  // namespace copnet
