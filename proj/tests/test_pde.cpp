#include <doctest.h>

#include <cmath>
#include <numeric>

#include "copnet/pde.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace copnet;

namespace {

double total(const Field2D& f) {
    return std::accumulate(f.values.begin(), f.values.end(), 0.0);
}

Field2D uniform_field(int w, int h, double spacing, double value) {
    return Field2D(w, h, spacing, value);
}

// A small grid of contour lines for oracle comparisons.
BinaryMask grid_contours(int w, int h, int period) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (x % period == 0 || y % period == 0 || x == w - 1 || y == h - 1)
                m.at(x, y) = 1;
    return m;
}

}  // namespace

TEST_CASE("build_system: zero coefficients give identity operators") {
    const Field2D zero = uniform_field(5, 4, 1.0, 0.0);
    const PdeSystem sys = build_system(zero, zero, 0.1);
    Rng rng(1);
    const Field2D u = testutil::random_field(5, 4, 1.0, rng);
    std::vector<double> out(u.pixel_count());
    sys.apply_implicit(u.values, out);
    CHECK(out == u.values);
    sys.apply_explicit(u.values, out);
    CHECK(out == u.values);

    const Field2D stepped = step(u, sys);
    CHECK(stepped.values == u.values);
}

TEST_CASE("build_system: 1x1 domain reduces to the scalar reaction") {
    const Field2D alpha = uniform_field(1, 1, 1.0, 0.0);
    const Field2D beta = uniform_field(1, 1, 1.0, 2.0);
    const double dt = 0.1;
    const PdeSystem sys = build_system(alpha, beta, dt);

    std::vector<double> one = {1.0}, out = {0.0};
    sys.apply_implicit(one, out);
    CHECK(out[0] == doctest::Approx(1.0 + 2.0 * dt / 2.0).epsilon(1e-15));

    Field2D u(1, 1, 1.0, 0.7);
    const Field2D next = step(u, sys);
    CHECK(next.values[0] ==
          doctest::Approx(0.7 * (1.0 - dt) / (1.0 + dt)).epsilon(1e-12));
}

TEST_CASE("build_system: Neumann stencil has zero row sums") {
    const Field2D alpha = uniform_field(3, 3, 1.0, 0.8);
    const Field2D beta = uniform_field(3, 3, 1.0, 0.0);
    const PdeSystem sys = build_system(alpha, beta, 0.2);
    // A constant vector is fixed by both operators iff every row of the
    // Laplacian sums to zero.
    std::vector<double> ones(9, 1.0), out(9);
    sys.apply_implicit(ones, out);
    for (double v : out) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    sys.apply_explicit(ones, out);
    for (double v : out) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("build_system: input validation") {
    const Field2D a = uniform_field(4, 4, 1.0, 1.0);
    const Field2D b = uniform_field(5, 4, 1.0, 0.0);
    CHECK_THROWS_AS(build_system(a, b, 0.1), std::invalid_argument);

    Field2D neg = uniform_field(4, 4, 1.0, 0.0);
    neg.values[3] = -0.5;
    CHECK_THROWS_AS(build_system(neg, a, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_system(a, neg, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_system(a, a, 0.0), std::invalid_argument);
}

TEST_CASE("step: uniform reaction decays pointwise by the scalar factor") {
    const double b = 0.8, dt = 0.05;
    const Field2D alpha = uniform_field(12, 9, 0.5, 0.0);
    const Field2D beta = uniform_field(12, 9, 0.5, b);
    const PdeSystem sys = build_system(alpha, beta, dt);
    Rng rng(2);
    const Field2D u = testutil::random_field(12, 9, 0.5, rng);
    const Field2D next = step(u, sys);
    const double factor = (1.0 - b * dt / 2.0) / (1.0 + b * dt / 2.0);
    for (std::size_t i = 0; i < u.values.size(); ++i)
        CHECK(next.values[i] == doctest::Approx(u.values[i] * factor).epsilon(1e-9));
}

TEST_CASE("step: pure diffusion conserves total mass") {
    DegradeConfig cfg;
    Rng rng = Rng::stream(77, 0);
    const double spacing = 90.0 / 128.0;
    const Field2D alpha = gen_alpha(cfg, 128, 128, spacing, rng);
    const Field2D beta = uniform_field(128, 128, spacing, 0.0);
    const Field2D u0 = to_field(grid_contours(128, 128, 16), spacing);

    const Field2D uT = evolve(u0, alpha, beta, 1.0, 0.05);
    const double m0 = total(u0);
    CHECK(std::abs(total(uT) - m0) <= 1e-9 * m0);
}

TEST_CASE("step: solver reports non-convergence") {
    const Field2D alpha = uniform_field(16, 16, 0.1, 50.0);
    const Field2D beta = uniform_field(16, 16, 0.1, 0.0);
    PdeSystem sys = build_system(alpha, beta, 0.1);
    sys.solver_max_iters = 1;
    Rng rng(3);
    const Field2D u = testutil::random_field(16, 16, 0.1, rng);
    CHECK_THROWS_WITH_AS(step(u, sys), doctest::Contains("did not converge"),
                         std::runtime_error);
}

TEST_CASE("degrade: analytic exponential decay halves the field") {
    Rng rng(4);
    Field2D u0(64, 64, 0.5, 0.0, FieldRole::probability);
    for (auto& v : u0.values) v = rng.next_double() < 0.2 ? 0.0 : rng.uniform(0.1, 1.0);
    const Field2D alpha = uniform_field(64, 64, 0.5, 0.0);
    const Field2D beta = uniform_field(64, 64, 0.5, std::log(2.0));

    const Field2D half = degrade(u0, alpha, beta, 1.0, 0.01);
    for (std::size_t i = 0; i < u0.values.size(); ++i) {
        const double expected = u0.values[i] / 2.0;
        CHECK(std::abs(half.values[i] - expected) <= 1e-4 * expected);
    }
}

TEST_CASE("degrade: identity when both coefficients vanish") {
    Rng rng(5);
    Field2D u0 = testutil::random_field(20, 20, 1.0, rng);
    u0.role = FieldRole::probability;
    const Field2D zero = uniform_field(20, 20, 1.0, 0.0);
    const Field2D out = degrade(u0, zero, zero, 1.0, 0.1);
    for (std::size_t i = 0; i < u0.values.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(u0.values[i]).epsilon(1e-12));
}

TEST_CASE("degrade: agrees with an explicit-Euler oracle on a 32x32 crop") {
    const double spacing = 90.0 / 512.0;
    const BinaryMask contours = grid_contours(32, 32, 8);
    const Field2D u0 = to_field(contours, spacing);

    DegradeConfig cfg;
    // Explicit sites: one diffusion blob and one drop centered on contour
    // pixels so both mechanisms act on the mask.
    const std::vector<PerturbSite> alpha_sites = {{8.5 * spacing, 8.5 * spacing, 2.0}};
    const std::vector<PerturbSite> beta_sites = {{16.5 * spacing, 8.5 * spacing, 2.0},
                                                 {8.5 * spacing, 24.5 * spacing, 1.5}};
    const Field2D alpha = alpha_from_sites(alpha_sites, cfg, 32, 32, spacing);
    const Field2D beta = beta_from_sites(beta_sites, cfg, 32, 32, spacing);

    const Field2D cn = degrade(u0, alpha, beta, 1.0, 0.05);
    const Field2D euler = oracles::explicit_euler(u0, alpha, beta, 1.0, 1e-4);

    double max_diff = 0.0, max_val = 0.0;
    for (std::size_t i = 0; i < cn.values.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(cn.values[i] - euler.values[i]));
        max_val = std::max(max_val, cn.values[i]);
    }
    CHECK(max_diff < 5e-3);
    CHECK(max_val < 1.0);                    // diffusion spreads the peak down
    CHECK(total(cn) < total(u0));            // the drop term removes mass
    for (double v : cn.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("evolve: linear before clamping") {
    DegradeConfig cfg;
    Rng rng = Rng::stream(6, 1);
    const double spacing = 0.4;
    const Field2D alpha = gen_alpha(cfg, 24, 24, spacing, rng);
    const Field2D beta = gen_beta(cfg, 24, 24, spacing, rng);
    Rng data(7);
    const Field2D u = testutil::random_field(24, 24, spacing, data);
    const Field2D v = testutil::random_field(24, 24, spacing, data);

    const double a = 0.6, b = -0.3;
    Field2D combo(24, 24, spacing);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = a * u.values[i] + b * v.values[i];

    const Field2D eu = evolve(u, alpha, beta, 0.5, 0.05);
    const Field2D ev = evolve(v, alpha, beta, 0.5, 0.05);
    const Field2D ecombo = evolve(combo, alpha, beta, 0.5, 0.05);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        CHECK(std::abs(ecombo.values[i] - (a * eu.values[i] + b * ev.values[i])) < 1e-8);
}

TEST_CASE("evolve: mass never grows when beta >= 0") {
    DegradeConfig cfg;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng = Rng::stream(100 + s, 0);
        const double spacing = 0.5;
        const Field2D alpha = gen_alpha(cfg, 32, 32, spacing, rng);
        const Field2D beta = gen_beta(cfg, 32, 32, spacing, rng);
        const Field2D u0 = to_field(grid_contours(32, 32, 8), spacing);
        const Field2D uT = evolve(u0, alpha, beta, 1.0, 0.05);
        CHECK(total(uT) <= total(u0) * (1.0 + 1e-9));
    }
}

TEST_CASE("evolve: second-order convergence in dt") {
    // Discrete eigenmode of the uniform-alpha Neumann Laplacian, so the
    // only error against the exact semi-discrete solution is temporal.
    const int n = 48;
    const double alpha_val = 0.5, beta_val = 1.47, horizon = 1.0;
    const Field2D alpha = uniform_field(n, n, 1.0, alpha_val);
    const Field2D beta = uniform_field(n, n, 1.0, beta_val);

    const int kx = 2, ky = 3;
    Field2D mode(n, n, 1.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            mode.at(x, y) = std::cos(M_PI * kx * (x + 0.5) / n) *
                            std::cos(M_PI * ky * (y + 0.5) / n);

    const double lam = -4.0 * alpha_val *
                       (std::pow(std::sin(M_PI * kx / (2.0 * n)), 2) +
                        std::pow(std::sin(M_PI * ky / (2.0 * n)), 2));
    const double mu_mode = lam - beta_val;
    const double mu_const = -beta_val;

    Field2D u0(n, n, 1.0);
    for (std::size_t i = 0; i < u0.values.size(); ++i)
        u0.values[i] = 0.5 + 0.4 * mode.values[i];

    auto linf_error = [&](double dt) {
        const Field2D uT = evolve(u0, alpha, beta, horizon, dt);
        double err = 0.0;
        for (std::size_t i = 0; i < uT.values.size(); ++i) {
            const double exact = 0.5 * std::exp(mu_const * horizon) +
                                 0.4 * std::exp(mu_mode * horizon) * mode.values[i];
            err = std::max(err, std::abs(uT.values[i] - exact));
        }
        return err;
    };

    const double e0 = linf_error(0.2);
    const double e1 = linf_error(0.1);
    const double e2 = linf_error(0.05);
    const double e3 = linf_error(0.025);
    for (const double ratio : {e0 / e1, e1 / e2, e2 / e3}) {
        CHECK(ratio >= 3.4);
        CHECK(ratio <= 4.6);
    }
}

TEST_CASE("evolve: partial final step covers a non-integral horizon") {
    const Field2D alpha = uniform_field(8, 8, 1.0, 0.0);
    const Field2D beta = uniform_field(8, 8, 1.0, 1.0);
    Field2D u0(8, 8, 1.0, 1.0);
    // Pure reaction with uniform beta is exactly the product of per-step
    // scalar factors, so the partial step is directly observable.
    const Field2D uT = evolve(u0, alpha, beta, 0.25, 0.1);
    const double full = (1.0 - 0.05) / (1.0 + 0.05);
    const double partial = (1.0 - 0.025) / (1.0 + 0.025);
    CHECK(uT.values[0] == doctest::Approx(full * full * partial).epsilon(1e-12));
}

TEST_CASE("simulate_training_pair: deterministic and conservative baseline") {
    const BinaryMask gt = grid_contours(48, 48, 12);
    DegradeConfig cfg;
    cfg.seed = 99;

    const auto [d1, t1] = simulate_training_pair(gt, cfg, 0.5, 4, 2);
    const auto [d2, t2] = simulate_training_pair(gt, cfg, 0.5, 4, 2);
    CHECK(d1.values == d2.values);
    CHECK(t1.bits == gt.bits);
    CHECK(d1.role == FieldRole::probability);

    const auto [d3, t3] = simulate_training_pair(gt, cfg, 0.5, 5, 2);
    CHECK(d1.values != d3.values);

    DegradeConfig pure;
    pure.n1 = 0;
    pure.n2 = 0;
    const auto [blur, target] = simulate_training_pair(gt, pure, 0.5, 0, 0);
    const double m0 = double(gt.foreground_count());
    CHECK(std::abs(total(blur) - m0) <= 1e-9 * m0);
    (void)target;
}

TEST_CASE("simulate_training_pair: every grid-search configuration is valid") {
    const BinaryMask gt = grid_contours(32, 32, 8);
    for (const int n1 : {0, 6, 12}) {
        for (const int n2 : {0, 10, 20}) {
            DegradeConfig cfg;
            cfg.n1 = n1;
            cfg.n2 = n2;
            const auto [degraded, target] = simulate_training_pair(gt, cfg, 0.3, 1, 0);
            for (double v : degraded.values) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            CHECK(target.bits == gt.bits);
        }
    }
}
