#pragma once

// Scalar Gaussian MRFs p(x) ~ exp(-x^T J x / 2 + h^T x): walk-summability and
// conversion to an equivalent pairwise linear Gaussian model through a
// factor-width-two factorization of J - omega I.

#include "gabp/model.hpp"

#include <optional>

namespace gabp {

struct MrfModel {
  Matrix J;
  Vector h;

  /// R = I - J (meaningful for the normalized form).
  Matrix R() const { return Matrix::Identity(J.rows(), J.cols()) - J; }
};

struct NormalizedMrf {
  MrfModel mrf;
  /// D = diag(J_raw)^{-1/2}; original means are D times the normalized ones.
  Vector scale;
};

/// J = D J_raw D, h = D h_raw.
NormalizedMrf normalize_mrf(const Matrix& J_raw, const Vector& h_raw);

struct WalkSummabilityReport {
  double lambda_min = 0;  ///< lambda_min(I - |R|)
  bool walk_summable = false;
};

WalkSummabilityReport check_walk_summability(const MrfModel& mrf);

struct FactorWidth2Factorization {
  double omega = 0;
  Matrix V;  ///< J - omega I = V V^T, at most two nonzeros per column
  Index columns() const { return V.cols(); }
};

/// Nonzeros per column of V.
int max_column_nonzeros(const Matrix& V);

/// Throws Error when the model is not walk-summable or omega is outside
/// (0, lambda_min(I - |R|)). Default omega is 0.5 * min(1, lambda_min).
FactorWidth2Factorization factor_width_two(const MrfModel& mrf,
                                           std::optional<double> omega = std::nullopt);

/// One scalar variable per MRF node (ids 1..N). Node n gets a unary factor
/// (id n) carrying its prior mean; every two-nonzero column of V becomes a
/// pairwise factor with y = 0 and unit noise (ids N+1, ...). Columns with a
/// single nonzero are folded into the prior.
LinearGaussianModel mrf_to_linear_gaussian(const MrfModel& mrf,
                                           const FactorWidth2Factorization& fac);

/// mu = J^{-1} h by dense Cholesky; throws NumericError unless J > 0.
Vector mrf_marginal_oracle(const MrfModel& mrf);

}  // namespace gabp
