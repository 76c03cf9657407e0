#pragma once

#include <span>
#include <utility>

#include "copnet/field.hpp"
#include "copnet/perturb.hpp"

namespace copnet {

// Crank-Nicolson discretization of  du/dt = div(alpha grad u) - beta u
// with zero-flux (mirrored ghost) boundaries. The spatial operator uses
// arithmetic face-averaged alpha on a 5-point stencil; its row sums are
// exactly zero, so with beta = 0 the total mass is conserved.
//
// Half-step operators, applied matrix-free:
//   implicit A = I + (dt/2) (-L_alpha + diag(beta))
//   explicit B = I - (dt/2) (-L_alpha + diag(beta))
// A is symmetric positive definite for alpha, beta >= 0 and dt > 0.
struct PdeSystem {
    int width = 0;
    int height = 0;
    double spacing = 1.0;
    double dt = 0.0;
    std::vector<double> beta;    // per-pixel reaction coefficient
    std::vector<double> face_x;  // alpha/h^2 on vertical faces, (width-1) x height
    std::vector<double> face_y;  // alpha/h^2 on horizontal faces, width x (height-1)

    double solver_tol = 1e-12;   // relative residual target for the CG solve
    int solver_max_iters = 20000;

    void apply_implicit(std::span<const double> u, std::span<double> out) const;
    void apply_explicit(std::span<const double> u, std::span<double> out) const;
};

PdeSystem build_system(const Field2D& alpha, const Field2D& beta, double dt);

// One Crank-Nicolson step: solves A u_next = B u with Jacobi-preconditioned
// conjugate gradients. Throws if the solve does not converge.
Field2D step(const Field2D& u, const PdeSystem& system);

// Integrates over [0, T] in steps of dt (plus one partial step when T is
// not a multiple of dt). No clamping; accepts any real-valued field.
Field2D evolve(const Field2D& u0, const Field2D& alpha, const Field2D& beta, double total_time,
               double dt);

// evolve() followed by a clamp to [0, 1]; requires u0 in [0, 1] and tags
// the result as a probability map.
Field2D degrade(const Field2D& u0, const Field2D& alpha, const Field2D& beta, double total_time,
                double dt);

// Lifts a ground-truth contour mask, draws (alpha, beta) from the
// (seed, slice, repetition) stream, and degrades it. Returns the degraded
// probability map together with the target mask.
std::pair<Field2D, BinaryMask> simulate_training_pair(const BinaryMask& gt_mask,
                                                      const DegradeConfig& config,
                                                      double spacing_um,
                                                      std::uint64_t slice_index,
                                                      std::uint64_t repetition = 0);

}  // namespace copnet
