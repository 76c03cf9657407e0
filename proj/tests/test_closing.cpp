#include <doctest.h>

#include <fstream>

#include "copnet/closing.hpp"
#include "copnet/copf_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace copnet;

namespace {

void write_script(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    out << "#!/bin/sh\n" << body << "\n";
    out.close();
    std::filesystem::permissions(path, std::filesystem::perms::owner_all,
                                 std::filesystem::perm_options::add);
}

}  // namespace

TEST_CASE("close_morphological: constant fields are unchanged") {
    Field2D f(9, 9, 1.0, 0.42);
    const Field2D out = close_morphological(f, 2);
    CHECK(out.values == f.values);
}

TEST_CASE("close_morphological: radius 2 bridges a 1-px gap in a line") {
    // 11x11, horizontal 1-px line at y=5 with a gap at x=5.
    Field2D f(11, 11, 1.0, 0.0);
    for (int x = 0; x < 11; ++x) f.at(x, 5) = 1.0;
    f.at(5, 5) = 0.0;

    const Field2D closed = close_morphological(f, 2);
    const Field2D expected = oracles::closing_by_scan(f, 2);
    CHECK(closed.values == expected.values);
    CHECK(closed.at(5, 5) == 1.0);
}

TEST_CASE("close_morphological: idempotent and extensive") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const Field2D f = testutil::random_field(20, 14, 1.0, rng);
        const Field2D once = close_morphological(f, 1 + trial % 3);
        const Field2D twice = close_morphological(once, 1 + trial % 3);
        CHECK(once.values == twice.values);
        for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(once.values[i] >= f.values[i]);
    }
}

TEST_CASE("close_morphological: matches the direct-scan oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Field2D f = testutil::random_field(13, 11, 1.0, rng);
        const Field2D fast = close_morphological(f, 2);
        const Field2D slow = oracles::closing_by_scan(f, 2);
        CHECK(fast.values == slow.values);
    }
}

TEST_CASE("run_backend: identity returns the input") {
    Rng rng(3);
    const Field2D f = testutil::random_field(8, 8, 1.0, rng);
    const Field2D out = run_backend(IdentityBackend{}, f);
    CHECK(out.values == f.values);
}

TEST_CASE("run_backend: external copy process round-trips bit-exactly") {
    testutil::ScratchDir dir("ext");
    const auto script = dir.path / "copy.sh";
    write_script(script, "cp \"$1\" \"$2\"");

    Rng rng(4);
    Field2D f = testutil::random_field(17, 9, 0.25, rng);
    for (auto& v : f.values) v = double(float(v));  // COPF carries f32 samples

    const Field2D out = run_backend(ExternalBackend{script.string(), 30.0}, f);
    CHECK(out.values == f.values);
    CHECK(out.width == f.width);
    CHECK(out.height == f.height);
}

TEST_CASE("run_backend: wrong output dimensions are a contract error") {
    testutil::ScratchDir dir("ext");
    const auto wrong = dir.path / "wrong.copf";
    write_copf(Field2D(3, 3, 1.0, 0.5), wrong);
    const auto script = dir.path / "wrongdims.sh";
    write_script(script, "cp " + wrong.string() + " \"$2\"");

    const Field2D f(8, 8, 1.0, 0.5);
    CHECK_THROWS_WITH_AS(run_backend(ExternalBackend{script.string(), 30.0}, f),
                         doctest::Contains("dimension mismatch"), std::invalid_argument);
}

TEST_CASE("run_backend: nonzero exit code is reported") {
    testutil::ScratchDir dir("ext");
    const auto script = dir.path / "fail.sh";
    write_script(script, "exit 3");
    const Field2D f(4, 4, 1.0, 0.5);
    CHECK_THROWS_WITH_AS(run_backend(ExternalBackend{script.string(), 30.0}, f),
                         doctest::Contains("exited with code 3"), std::runtime_error);
}

TEST_CASE("run_backend: hung process hits the timeout") {
    testutil::ScratchDir dir("ext");
    const auto script = dir.path / "sleep.sh";
    write_script(script, "sleep 30");
    const Field2D f(4, 4, 1.0, 0.5);
    CHECK_THROWS_WITH_AS(run_backend(ExternalBackend{script.string(), 0.2}, f),
                         doctest::Contains("timed out"), std::runtime_error);
}

TEST_CASE("modified_fraction: identical, complementary, and counted cases") {
    Field2D a(8, 8, 1.0, 0.8);
    CHECK(modified_fraction(a, a, 0.5) == 0.0);

    Field2D b(8, 8, 1.0, 0.2);
    CHECK(modified_fraction(a, b, 0.5) == 1.0);

    // 512x512 maps differing at exactly 262 binarized pixels.
    Field2D u_prev(512, 512, 1.0, 0.2);
    Field2D u_next = u_prev;
    for (int i = 0; i < 262; ++i) u_next.values[std::size_t(i) * 641] = 0.9;
    const double frac = modified_fraction(u_prev, u_next, 0.5);
    CHECK(frac == 262.0 / 262144.0);
    CHECK(frac < 0.001);
}

TEST_CASE("modified_fraction: dimension mismatch") {
    Field2D a(4, 4, 1.0, 0.0);
    Field2D b(5, 4, 1.0, 0.0);
    CHECK_THROWS_AS(modified_fraction(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("iterate_closing: identity backend converges immediately") {
    Rng rng(5);
    const Field2D u0 = testutil::random_field(16, 16, 1.0, rng);
    ClosingConfig cfg;
    cfg.backend = IdentityBackend{};
    const ClosingRun run = iterate_closing(u0, cfg);
    CHECK(run.iterations == 1);
    CHECK(run.history == std::vector<double>{0.0});
    CHECK(run.converged);
    CHECK(run.final_map.values == u0.values);
}

TEST_CASE("iterate_closing: idempotent backends stop within two iterations") {
    Rng rng(6);
    ClosingConfig cfg;
    cfg.backend = MorphologicalBackend{2};
    for (int trial = 0; trial < 8; ++trial) {
        const Field2D u0 = testutil::random_field(24, 24, 1.0, rng);
        const ClosingRun run = iterate_closing(u0, cfg);
        CHECK(run.iterations <= 2);
        CHECK(run.converged);
        for (double h : run.history) {
            CHECK(h >= 0.0);
            CHECK(h <= 1.0);
        }
    }

    // Already-closed input: converges at the first iteration.
    const Field2D closed = close_morphological(testutil::random_field(24, 24, 1.0, rng), 2);
    const ClosingRun run = iterate_closing(closed, cfg);
    CHECK(run.iterations == 1);
    CHECK(run.history == std::vector<double>{0.0});
}

TEST_CASE("iterate_closing: a non-converging backend hits the iteration cap") {
    ClosingConfig cfg;
    cfg.max_iters = 7;
    // Flips the whole map every call.
    cfg.backend = FunctionBackend{[](const Field2D& in) {
        Field2D out = in;
        for (auto& v : out.values) v = 1.0 - v;
        return out;
    }};
    const Field2D u0(10, 10, 1.0, 0.9);
    const ClosingRun run = iterate_closing(u0, cfg);
    CHECK(run.iterations == 7);
    CHECK_FALSE(run.converged);
    CHECK(run.history.size() == 7);
    for (double h : run.history) CHECK(h == 1.0);
}

TEST_CASE("iterate_closing: emits every intermediate map in order") {
    ClosingConfig cfg;
    cfg.max_iters = 4;
    cfg.backend = FunctionBackend{[](const Field2D& in) {
        Field2D out = in;
        for (auto& v : out.values) v = 1.0 - v;
        return out;
    }};
    const Field2D u0(6, 6, 1.0, 0.8);
    std::vector<int> seen;
    const ClosingRun run = iterate_closing(u0, cfg, [&](int k, const Field2D& map) {
        seen.push_back(k);
        CHECK(map.pixel_count() == u0.pixel_count());
    });
    CHECK(seen == std::vector<int>{0, 1, 2, 3});
    CHECK(run.iterations == 4);
}

TEST_CASE("iterate_closing: config validation") {
    ClosingConfig bad;
    bad.eps_conv = 0.0;
    CHECK_THROWS_AS(iterate_closing(Field2D(2, 2, 1.0, 0.0), bad), std::invalid_argument);
    bad = ClosingConfig{};
    bad.max_iters = 0;
    CHECK_THROWS_AS(iterate_closing(Field2D(2, 2, 1.0, 0.0), bad), std::invalid_argument);
    bad = ClosingConfig{};
    bad.theta = 1.0;
    CHECK_THROWS_AS(iterate_closing(Field2D(2, 2, 1.0, 0.0), bad), std::invalid_argument);
}
