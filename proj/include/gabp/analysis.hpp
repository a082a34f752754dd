#pragma once

// Convergence analysis: information-matrix bounds and fixed point, the mean
// recursion matrix Q, the rho(Q) verdict and contraction-rate fitting.

#include "gabp/bp.hpp"

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gabp {

/// Per f2v edge sandwich L_e <= J_e^{(l)} <= U_e (l >= 1):
///   U_e = A_{n,i}^T R_n^{-1} A_{n,i}
///   L_e = A_{n,i}^T [R_n + sum_{j != i} A_{n,j} W_j A_{n,j}^T]^{-1} A_{n,i}
struct BoundsLU {
  std::vector<Matrix> lower;
  std::vector<Matrix> upper;

  Matrix stacked_lower() const;
  Matrix stacked_upper() const;
};

BoundsLU compute_bounds(const GaussianFactorGraph& gfg);

struct FixedPoint {
  std::vector<Matrix> J_star;  ///< per f2v edge
  double residual = 0;         ///< max_e ||F(J*)_e - J*_e||_F
  int iterations = 0;
  bool converged = false;
};

struct FixedPointOptions {
  InitStrategy init;
  double tol = 1e-12;
  int max_iters = 10000;
};

/// Iterates J <- F(J) until the part-metric step or the relative Frobenius
/// step drops below tol.
FixedPoint information_fixed_point(const GaussianFactorGraph& gfg,
                                   const FixedPointOptions& opts = {});

/// Part-metric distance of each J-only iterate to a reference, starting with
/// the initial value (l = 0). +inf where the iterate is singular.
std::vector<double> information_trajectory(const GaussianFactorGraph& gfg,
                                           const InitStrategy& init,
                                           const std::vector<Matrix>& reference, int iterations);

/// Mean recursion with frozen J*: v^{(l)} = b - Q v^{(l-1)} over stacked v2f means.
struct QSystem {
  Matrix Q;
  Vector b;
  std::vector<Matrix> J_v2f_star;  ///< per v2f edge
  /// M_{k,j} = R_k + sum_{z in B(f_k)\j} A_{k,z} [J*_{z->f_k}]^{-1} A_{k,z}^T, keyed by
  /// (factor id, variable id).
  std::map<std::pair<int, int>, Matrix> M_blocks;
  /// Block sparsity: v2f edges whose means feed each row edge.
  std::vector<std::vector<int>> block_pattern;
};

QSystem assemble_Q(const GaussianFactorGraph& gfg, const FixedPoint& fp);

/// True when the block pattern has no directed cycle, which makes Q nilpotent
/// regardless of the block values (tree-structured graphs).
bool structurally_nilpotent(const QSystem& q);

/// rho(Q): exactly 0 for structurally nilpotent Q, numerics::spectral_radius
/// otherwise. Eigensolvers resolve nilpotent Jordan blocks only to about
/// eps^(1/k), so the structural test comes first.
double q_spectral_radius(const QSystem& q);

struct MeanRecursionResult {
  BpStatus status = BpStatus::kMaxIters;
  Vector v;
  int iterations = 0;
};

/// Runs v <- b - Q v from v0 (zero when empty).
MeanRecursionResult two_phase_mean_recursion(const QSystem& q, const Vector& v0 = {},
                                             double tol = 1e-10, int max_iters = 100000,
                                             double divergence_threshold = 1e12);

/// Messages with J frozen at J* and v2f means taken from a stacked vector;
/// f2v means follow from one factor update.
MessageSet messages_from_v2f(const GaussianFactorGraph& gfg, const FixedPoint& fp,
                             const QSystem& q, const Vector& v2f_means);

enum class Verdict {
  kGuaranteedByTopology,
  kConvergesRhoLt1,
  kDivergesRhoGe1,
  kBorderline,
};

const char* to_string(Verdict v);

inline constexpr double kBorderlineBand = 1e-3;

Verdict decide_mean_convergence(double rho_Q, const TopologyClass& topo);

struct RateFit {
  double c = 1;
  int first = 0;  ///< first iteration of the fitted suffix
  int last = 0;
  int points = 0;
  bool non_contracting = false;
  /// Smallest c with d_l <= c^l d_0 over the fitted suffix; NaN when d_0 is
  /// not finite.
  double envelope_c = std::numeric_limits<double>::quiet_NaN();
};

/// Least-squares slope of log d_l against l over the longest non-increasing
/// suffix of values above the floor; c = exp(slope). Absent with < 3 points.
std::optional<RateFit> fit_contraction_rate(const std::vector<double>& d, double floor = 1e-13);

/// True when d_l <= c^l d_0 for every l >= 2 with d_l above the floor.
bool geometric_envelope_holds(const std::vector<double>& d, double c, double floor = 1e-13);

struct CertifyOptions {
  FixedPointOptions fixed_point;
  /// Initialization used for the rate trajectory and the BP cross-check.
  InitStrategy init;
  bool run_bp_check = false;
  RunOptions bp;
};

struct ConvergenceReport {
  TopologyClass topology;
  BoundsLU bounds;
  FixedPoint fixed_point;
  double rho_Q = 0;
  Verdict verdict = Verdict::kBorderline;
  std::optional<RateFit> rate;
  std::vector<double> part_metric_trajectory;
  /// BP cross-check (when requested).
  std::optional<BpStatus> bp_status;
  std::optional<int> bp_iterations;
  std::optional<double> bp_max_mean_error;  ///< vs centralized solve
  std::vector<std::string> notes;
  double fixed_point_tol = 0;
};

ConvergenceReport certify(const GaussianFactorGraph& gfg, const CertifyOptions& opts = {});

}  // namespace gabp
