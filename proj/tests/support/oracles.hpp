#pragma once

// Test-side reference computations, written independently of the library
// code paths they check.

#include "gabp/model.hpp"

namespace gabp::testing {

/// Posterior mean as a whitened least-squares problem
///   min |L_R^{-1}(y - A x)|^2 + |L_W^{-1} x|^2
/// solved by Householder QR (no normal equations).
Vector least_squares_posterior_mean(const LinearGaussianModel& model);

/// E - V + C on the bipartite graph, counted with union-find.
int cycle_rank_union_find(const LinearGaussianModel& model);

/// inf{log a : aX >= Y >= X/a} by bisection on a with Cholesky feasibility.
double part_metric_bisection(const Matrix& X, const Matrix& Y, double tol = 1e-13);

/// x = J^{-1} h by conjugate gradients with iterative refinement.
Vector refined_solve(const Matrix& J, const Vector& h);

}  // namespace gabp::testing

namespace gabp::testing {

/// Posterior mean of a model whose factor `noiseless_id` has R = 0, treated
/// as the hard constraint A_n x = y_n and solved by the null-space method.
Vector constrained_posterior_mean(const LinearGaussianModel& model, int noiseless_id);

}  // namespace gabp::testing
