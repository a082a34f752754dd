#pragma once

// Vector-valued Gaussian belief propagation on the factor graph of a linear
// Gaussian model. Messages are carried as (information matrix J, mean v).

#include "gabp/graph.hpp"
#include "gabp/model.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gabp {

/// Model + factor graph + canonical edge order + cached prior information
/// W_j^{-1}. Everything the message updates need, built once.
class GaussianFactorGraph {
 public:
  explicit GaussianFactorGraph(LinearGaussianModel model);

  const LinearGaussianModel& model() const { return model_; }
  const FactorGraph& graph() const { return graph_; }
  const EdgeIndex& edges() const { return edges_; }
  const Matrix& prior_info(int var_pos) const { return prior_info_[var_pos]; }
  const FactorSpec& factor_at(int factor_pos) const { return model_.factors[factor_pos]; }
  const Matrix& coeff(int factor_pos, int var_pos) const;
  Index var_dim(int var_pos) const { return graph_.var_dims[var_pos]; }

 private:
  LinearGaussianModel model_;
  FactorGraph graph_;
  EdgeIndex edges_;
  std::vector<Matrix> prior_info_;
};

struct Message {
  Matrix J;
  Vector v;
};

/// All directed messages, indexed by EdgeIndex position.
struct MessageSet {
  std::vector<Message> f2v;
  std::vector<Message> v2f;
  int iteration = 0;
};

enum class InitKind { kZero, kLowerBound, kUpperBound, kCustom };

struct InitStrategy {
  InitKind kind = InitKind::kZero;
  /// Per f2v edge information matrices, used when kind == kCustom.
  std::vector<Matrix> custom_J;
  /// Per f2v edge initial means; zero when empty.
  std::vector<Vector> initial_v;

  static InitStrategy zero() { return {}; }
  static InitStrategy lower() { return {InitKind::kLowerBound, {}, {}}; }
  static InitStrategy upper() { return {InitKind::kUpperBound, {}, {}}; }
  static InitStrategy custom(std::vector<Matrix> J) { return {InitKind::kCustom, std::move(J), {}}; }
};

const char* to_string(InitKind kind);

enum class ScheduleKind { kSynchronous, kSequentialAscending, kRandomPermutation };

struct Schedule {
  ScheduleKind kind = ScheduleKind::kSynchronous;
  std::uint64_t seed = 0;
};

const char* to_string(ScheduleKind kind);

class InvalidInit : public Error {
 public:
  using Error::Error;
};

/// A factor-to-variable message does not exist (the Gaussian integral
/// diverges) or a message information matrix lost definiteness.
class MessageUndefined : public Error {
 public:
  MessageUndefined(const std::string& what, int factor_id, int var_id, bool strict_check);
  int factor_id() const { return factor_id_; }
  int var_id() const { return var_id_; }
  /// True when raised by the strict-mode existence / definiteness check rather than
  /// by a failed factorization.
  bool from_strict_check() const { return strict_; }

 private:
  int factor_id_;
  int var_id_;
  bool strict_;
};

/// Initial f2v messages per strategy; v2f messages start at the prior.
MessageSet init_messages(const GaussianFactorGraph& gfg, const InitStrategy& init);

/// J_{j->f_n} = W_j^{-1} + sum_{k != n} J_{f_k->j};  v = J^{-1} sum_{k != n} J_{f_k->j} v_{f_k->j}.
Message var_to_factor(const GaussianFactorGraph& gfg, const MessageSet& msgs, int var_id,
                      int factor_id);

/// J_{f_n->i} = A_{n,i}^T S^{-1} A_{n,i},  v = J^{-1} A_{n,i}^T S^{-1} (y_n - sum_j A_{n,j} v_{j->f_n})
/// with S = R_n + sum_{j != i} A_{n,j} J_{j->f_n}^{-1} A_{n,j}^T.
/// Throws MessageUndefined when S or an incoming J is not positive definite.
Message factor_to_var(const GaussianFactorGraph& gfg, const MessageSet& msgs, int factor_id,
                      int var_id);

/// A_e^T R_n^{-1} A_e + blockdiag(J_{j->f_n}) > 0 over the excluded neighbours e = B(f_n) \ i.
bool existence_check(const GaussianFactorGraph& gfg, const MessageSet& msgs, int factor_id,
                     int var_id);

/// One synchronous sweep of the J-only recursion: f2v information matrices at
/// iteration l from those at l - 1.
std::vector<Matrix> information_map(const GaussianFactorGraph& gfg,
                                    const std::vector<Matrix>& f2v_J);

/// v2f information matrices implied by a set of f2v information matrices.
std::vector<Matrix> v2f_information(const GaussianFactorGraph& gfg,
                                    const std::vector<Matrix>& f2v_J);

struct Belief {
  int var_id = 0;
  Vector mean;
  Matrix cov;
};

/// P_i = [W_i^{-1} + sum_n J_{f_n->i}]^{-1},  mu_i = P_i sum_n J_{f_n->i} v_{f_n->i}.
std::vector<Belief> compute_beliefs(const GaussianFactorGraph& gfg, const MessageSet& msgs);

enum class BpStatus { kConverged, kMaxIters, kDiverged };
const char* to_string(BpStatus status);

struct EdgeRecord {
  int iteration = 0;
  bool f2v = true;
  int from_id = 0;  ///< factor id for f2v, variable id for v2f
  int to_id = 0;
  double dJ_fro = 0;
  double dv_inf = 0;
  double part_metric_to_ref = std::numeric_limits<double>::quiet_NaN();
};

struct IterationRecord {
  int iteration = 0;
  double max_dJ_rel = 0;  ///< max_e ||dJ_e||_F / (1 + ||J_e||_F) over f2v edges
  double max_dv = 0;      ///< max_e |dv_e|_inf over f2v edges
  /// max_e d(J_e, J*_e) over f2v edges (part metric of the stacked
  /// block-diagonal J); +inf when some J_e is singular; NaN without reference.
  double part_metric_to_ref = std::numeric_limits<double>::quiet_NaN();
};

struct BpTrajectory {
  std::vector<IterationRecord> iterations;  ///< starts with iteration 0 (the init)
  std::vector<EdgeRecord> edges;            ///< empty unless recorded
  std::vector<std::vector<Belief>> belief_snapshots;
};

struct RunOptions {
  InitStrategy init;
  Schedule schedule;
  double tol_J = 1e-10;
  double tol_v = 1e-10;
  int max_iters = 10000;
  double divergence_threshold = 1e12;
  /// Run the existence check before every f2v update and assert that every
  /// message information matrix is pd after iteration 1.
  bool strict = false;
  bool record_edges = false;
  bool snapshot_beliefs = false;
  /// Reference f2v information matrices (e.g. J*) for part-metric tracking.
  std::optional<std::vector<Matrix>> reference_J;
};

struct BpResult {
  MessageSet messages;
  BpTrajectory trajectory;
  BpStatus status = BpStatus::kMaxIters;
  int iterations = 0;
  /// For converged runs: the first iteration whose messages already met the
  /// tolerance (convergence is detected one sweep later).
  int settled_iteration = -1;
  /// Smallest eigenvalue seen over all message information matrices for
  /// l >= 1 (definiteness diagnostics; only tracked in strict mode).
  double min_message_eig = std::numeric_limits<double>::infinity();
};

BpResult run_bp(const GaussianFactorGraph& gfg, const RunOptions& opts);

/// One synchronous iteration (v2f from prev.f2v, then f2v from the new v2f),
/// processing f2v edges in the given order. Exposed for order-independence
/// checks; run_bp uses the canonical order.
MessageSet synchronous_step(const GaussianFactorGraph& gfg, const MessageSet& prev,
                            const std::vector<int>& f2v_order, bool strict = false);

/// Part metric of two block-diagonal stacks: max over blocks.
double stacked_part_metric(const std::vector<Matrix>& x, const std::vector<Matrix>& y);

}  // namespace gabp
