#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "copnet/field.hpp"

namespace copnet {

struct IdentityBackend {};

struct MorphologicalBackend {
    int radius_px = 2;
};

// Per-map subprocess over COPF files: argv = [command..., in_path, out_path],
// exit code 0 on success, output read back from out_path.
struct ExternalBackend {
    std::string command;
    double timeout_s = 300.0;
};

// In-process closure, used by tests and embedders.
struct FunctionBackend {
    std::function<Field2D(const Field2D&)> fn;
};

using ClosingBackend =
    std::variant<IdentityBackend, MorphologicalBackend, ExternalBackend, FunctionBackend>;

struct ClosingConfig {
    double eps_conv = 0.001;  // converged when the modified-pixel fraction drops below this
    int max_iters = 30;
    double theta = 0.5;       // binarization threshold for counting modified pixels
    ClosingBackend backend = IdentityBackend{};

    void validate() const;
};

struct ClosingRun {
    Field2D final_map;
    int iterations = 0;
    std::vector<double> history;  // modified-pixel fraction per iteration
    bool converged = false;
};

// Grayscale closing (max filter then min filter) with a discrete disk
// {p : |p| <= radius + 0.5}. Extensive and idempotent.
Field2D close_morphological(const Field2D& field, int radius_px);

// Applies one backend pass; the result is clamped to [0, 1] and dimension
// checked against the input.
Field2D run_backend(const ClosingBackend& backend, const Field2D& field);

// Fraction of pixels whose binarization at theta changed between two maps.
double modified_fraction(const Field2D& u_prev, const Field2D& u_next, double theta);

// Applies the backend until modified_fraction < eps_conv or the iteration
// cap is reached. on_iteration, when set, receives every intermediate map.
ClosingRun iterate_closing(const Field2D& u0, const ClosingConfig& config,
                           const std::function<void(int, const Field2D&)>& on_iteration = {});

}  // namespace copnet
