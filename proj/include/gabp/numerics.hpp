#pragma once

// Dense kernels with explicit tolerance contracts: psd ordering, the part
// (Birkhoff) metric, spectral radius and symmetric eigen-extremes.
//
// Everything here is a free function template over Eigen::MatrixBase so that
// expressions (X - Y, A.transpose() * B, ...) can be passed directly.

#include "gabp/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace gabp {

/// Relative eigenvalue tolerance used by every psd / pd decision.
inline constexpr double kPsdTolerance = 1e-9;
/// Largest asymmetry accepted silently before symmetrization.
inline constexpr double kSymmetryTolerance = 1e-12;
/// Above this dimension spectral_radius switches to power iteration.
inline constexpr Index kDenseSpectralLimit = 2000;

template <typename Derived>
using PlainMatrixOf = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (x.rows() != x.cols()) {
    throw NumericError(std::string(what) + ": matrix is not square (" + std::to_string(x.rows()) +
                       "x" + std::to_string(x.cols()) + ")");
  }
}

/// Largest |x_ij - x_ji|.
template <typename Derived>
typename Derived::RealScalar asymmetry(const Eigen::MatrixBase<Derived>& x) {
  require_square(x, "asymmetry");
  if (x.size() == 0) return 0;
  return (x - x.transpose()).cwiseAbs().maxCoeff();
}

/// (X + X^T) / 2 as a plain matrix.
template <typename Derived>
PlainMatrixOf<Derived> symmetrize(const Eigen::MatrixBase<Derived>& x) {
  require_square(x, "symmetrize");
  PlainMatrixOf<Derived> out = x;
  out = (0.5 * (out + out.transpose())).eval();
  return out;
}

/// Square symmetric matrix. The input is symmetrized on construction; the
/// asymmetry that was removed is retained for diagnostics.
template <typename ScalarT>
class SymMatrix {
 public:
  using MatrixType = Eigen::Matrix<ScalarT, Eigen::Dynamic, Eigen::Dynamic>;

  SymMatrix() = default;

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& x)
      : input_asymmetry_(asymmetry(x)), value_(symmetrize(x)) {}

  const MatrixType& matrix() const { return value_; }
  Index dim() const { return value_.rows(); }
  ScalarT input_asymmetry() const { return input_asymmetry_; }
  bool had_excess_asymmetry() const { return input_asymmetry_ > kSymmetryTolerance; }

 private:
  ScalarT input_asymmetry_ = 0;
  MatrixType value_;
};

/// Ascending eigenvalues of the symmetrized input.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> sym_eigenvalues(
    const Eigen::MatrixBase<Derived>& x) {
  const auto s = symmetrize(x);
  if (s.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<PlainMatrixOf<Derived>> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return solver.eigenvalues();
}

template <typename Derived>
typename Derived::Scalar min_eig(const Eigen::MatrixBase<Derived>& x) {
  const auto ev = sym_eigenvalues(x);
  if (ev.size() == 0) throw NumericError("min_eig of an empty matrix");
  return ev(0);
}

template <typename Derived>
typename Derived::Scalar max_eig(const Eigen::MatrixBase<Derived>& x) {
  const auto ev = sym_eigenvalues(x);
  if (ev.size() == 0) throw NumericError("max_eig of an empty matrix");
  return ev(ev.size() - 1);
}

/// lambda_min > tol * max(1, lambda_max). Empty matrices are vacuously pd.
template <typename Derived>
bool is_pd(const Eigen::MatrixBase<Derived>& x) {
  if (!x.allFinite()) return false;
  const auto ev = sym_eigenvalues(x);
  if (ev.size() == 0) return true;
  using S = typename Derived::Scalar;
  return ev(0) > kPsdTolerance * std::max<S>(S(1), ev(ev.size() - 1));
}

/// lambda_min >= -tol * max(1, lambda_max).
template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& x) {
  if (!x.allFinite()) return false;
  const auto ev = sym_eigenvalues(x);
  if (ev.size() == 0) return true;
  using S = typename Derived::Scalar;
  return ev(0) >= -kPsdTolerance * std::max<S>(S(1), ev(ev.size() - 1));
}

enum class PsdOrder { kGreaterEqual, kLessEqual, kEqual, kIncomparable };

inline const char* to_string(PsdOrder order) {
  switch (order) {
    case PsdOrder::kGreaterEqual: return "X>=Y";
    case PsdOrder::kLessEqual: return "Y>=X";
    case PsdOrder::kEqual: return "equal";
    case PsdOrder::kIncomparable: return "incomparable";
  }
  return "?";
}

/// Loewner comparison of X and Y, decided by psd tests on X - Y and Y - X.
template <typename DerivedX, typename DerivedY>
PsdOrder psd_compare(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  require_square(x, "psd_compare");
  require_square(y, "psd_compare");
  if (x.rows() != y.rows()) {
    throw NumericError("psd_compare: dimension mismatch (" + std::to_string(x.rows()) + " vs " +
                       std::to_string(y.rows()) + ")");
  }
  const PlainMatrixOf<DerivedX> diff = x - y;
  const bool x_ge = is_psd(diff);
  const bool y_ge = is_psd(-diff);
  if (x_ge && y_ge) return PsdOrder::kEqual;
  if (x_ge) return PsdOrder::kGreaterEqual;
  if (y_ge) return PsdOrder::kLessEqual;
  return PsdOrder::kIncomparable;
}

/// X >= Y within tolerance (equal counts).
template <typename DerivedX, typename DerivedY>
bool psd_geq(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const auto order = psd_compare(x, y);
  return order == PsdOrder::kGreaterEqual || order == PsdOrder::kEqual;
}

/// Part (Birkhoff) metric d(X, Y) = inf{log a : aX >= Y >= X/a, a >= 1}.
///
/// Evaluated through the extreme generalized eigenvalues of Y v = lambda X v:
/// d = log max(lambda_max, 1 / lambda_min), clamped at zero.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar part_metric(const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedY>& y) {
  using S = typename DerivedX::Scalar;
  require_square(x, "part_metric");
  require_square(y, "part_metric");
  if (x.rows() != y.rows()) throw NumericError("part_metric: dimension mismatch");
  if (!is_pd(x) || !is_pd(y)) {
    throw NumericError("part metric requires positive definite arguments");
  }
  if (x.size() == 0) return S(0);
  const auto xs = symmetrize(x);
  const auto ys = symmetrize(y);
  Eigen::GeneralizedSelfAdjointEigenSolver<PlainMatrixOf<DerivedX>> solver(ys, xs,
                                                                           Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("generalized eigensolver failed");
  const auto& ev = solver.eigenvalues();
  const S hi = ev(ev.size() - 1);
  const S lo = ev(0);
  const S alpha = std::max(hi, S(1) / lo);
  return std::max(S(0), std::log(alpha));
}

/// Result of the iterative spectral-radius estimate used for large inputs.
struct SpectralRadiusEstimate {
  double value = 0;
  /// |rho_k - rho_{k-1}| at termination (relative to max(1, rho)).
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};

/// Spectral radius by power iteration. The radius is tracked as the growth
/// rate of ||M^k x|| over a two-step window, which also settles when the
/// dominant eigenvalues form a complex pair or a +/- pair.
template <typename Derived>
SpectralRadiusEstimate power_iteration_radius(const Eigen::MatrixBase<Derived>& m,
                                              double tol = 1e-10, int max_iters = 100000) {
  using S = typename Derived::Scalar;
  require_square(m, "power_iteration_radius");
  SpectralRadiusEstimate est;
  const Index n = m.rows();
  if (n == 0) {
    est.converged = true;
    return est;
  }
  Eigen::Matrix<S, Eigen::Dynamic, 1> x(n);
  // Deterministic start vector with no special structure.
  for (Index i = 0; i < n; ++i) x(i) = S(1) + S(0.1) * std::sin(S(1.0 + i));
  x.normalize();
  double prev = -1;
  for (int k = 1; k <= max_iters; ++k) {
    Eigen::Matrix<S, Eigen::Dynamic, 1> y = m * x;
    Eigen::Matrix<S, Eigen::Dynamic, 1> z = m * y;
    const S ny = y.norm();
    const S nz = z.norm();
    est.iterations = k;
    if (ny == S(0) || nz == S(0)) {
      est.value = 0;
      est.residual = 0;
      est.converged = true;
      return est;
    }
    const double rho = std::sqrt(static_cast<double>(nz));  // ||M^2 x|| with ||x|| = 1
    est.value = rho;
    if (prev >= 0) {
      est.residual = std::abs(rho - prev) / std::max(1.0, rho);
      if (est.residual < tol) {
        est.converged = true;
        return est;
      }
    }
    prev = rho;
    x = z / nz;
  }
  return est;
}

/// max |eigenvalue|. Dense eigensolver up to kDenseSpectralLimit, power
/// iteration (tolerance 1e-10) above it.
template <typename Derived>
double spectral_radius(const Eigen::MatrixBase<Derived>& m) {
  require_square(m, "spectral_radius");
  if (!m.allFinite()) throw NumericError("spectral_radius: non-finite entries");
  if (m.size() == 0) return 0.0;
  if (m.rows() > kDenseSpectralLimit) {
    const auto est = power_iteration_radius(m, 1e-10);
    return est.value;
  }
  const PlainMatrixOf<Derived> dense = m;
  Eigen::EigenSolver<PlainMatrixOf<Derived>> solver(dense, false);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed");
  return static_cast<double>(solver.eigenvalues().cwiseAbs().maxCoeff());
}

/// Smallest singular value over the largest; 0 for a zero matrix.
template <typename Derived>
double column_rank_ratio(const Eigen::MatrixBase<Derived>& a) {
  if (a.cols() == 0) return 1.0;
  if (a.rows() < a.cols()) return 0.0;
  const PlainMatrixOf<Derived> dense = a;
  Eigen::JacobiSVD<PlainMatrixOf<Derived>> svd(dense);
  const auto& s = svd.singularValues();
  const double hi = s(0);
  if (!(hi > 0)) return 0.0;
  return static_cast<double>(s(s.size() - 1)) / hi;
}

/// sigma_min > 1e-10 * sigma_max.
template <typename Derived>
bool has_full_column_rank(const Eigen::MatrixBase<Derived>& a) {
  if (!a.allFinite()) return false;
  return column_rank_ratio(a) > 1e-10;
}

/// Inverse of a symmetric positive definite matrix via LLT; throws on failure.
template <typename Derived>
PlainMatrixOf<Derived> spd_inverse(const Eigen::MatrixBase<Derived>& x, const char* what) {
  require_square(x, what);
  const auto s = symmetrize(x);
  Eigen::LLT<PlainMatrixOf<Derived>> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string(what) + ": matrix is not positive definite");
  }
  PlainMatrixOf<Derived> inv = llt.solve(PlainMatrixOf<Derived>::Identity(s.rows(), s.cols()));
  return symmetrize(inv);
}

}  // namespace gabp
