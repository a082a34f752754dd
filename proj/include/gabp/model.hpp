#pragma once

// Distributed linear Gaussian model: each factor n observes
//   y_n = sum_{i in scope(n)} A_{n,i} x_i + z_n,   z_n ~ N(0, R_n),
// and each variable carries a zero-mean prior x_i ~ N(0, W_i).

#include "gabp/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gabp {

struct VariableSpec {
  int id = 0;
  Index dim = 0;
  Matrix prior_cov;  ///< W_i
};

struct FactorSpec {
  int id = 0;
  std::vector<int> scope;          ///< ascending variable ids
  std::map<int, Matrix> coeff;     ///< variable id -> A_{n,i} (m_n x N_i)
  Matrix noise_cov;                ///< R_n
  Vector obs;                      ///< y_n

  Index obs_dim() const { return obs.size(); }
};

/// A model is an admissible input only when validate_model() reports nothing.
struct LinearGaussianModel {
  std::vector<VariableSpec> variables;  ///< ascending id
  std::vector<FactorSpec> factors;      ///< ascending id

  const VariableSpec* find_variable(int id) const;
  const FactorSpec* find_factor(int id) const;
  const VariableSpec& variable(int id) const;
  const FactorSpec& factor(int id) const;
  Index total_dim() const;
  Index total_obs_dim() const;

  bool operator==(const LinearGaussianModel&) const;
};

enum class IssueKind {
  kEmptyModel,
  kDuplicateId,
  kBadDimension,
  kPriorNotPd,
  kNoiseNotPd,
  kRankDeficient,
  kUnknownVariable,
  kScopeMismatch,
  kNonFinite,
  kNotNetworkForm,
};

struct ValidationIssue {
  IssueKind kind;
  std::optional<int> factor;
  std::optional<int> variable;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  /// Non-fatal diagnostics (e.g. covariance asymmetry that was symmetrized away).
  std::vector<std::string> warnings;
  bool ok() const { return issues.empty(); }
  std::string summary() const;
};

/// Checks every modelling assumption and reports all violations; never throws.
ValidationReport validate_model(const LinearGaussianModel& model);

/// Checks the one-factor-per-agent network form (scope(n) contains n and the
/// neighbour relation is symmetric). Informational; not required for validity.
ValidationReport network_form_issues(const LinearGaussianModel& model);

class InvalidModel : public Error {
 public:
  explicit InvalidModel(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Throws InvalidModel unless the model validates.
void require_valid(const LinearGaussianModel& model);

/// Stacked y = A x + z in ascending id order.
struct GlobalSystem {
  Matrix A;
  Matrix W;  ///< block diagonal prior covariance
  Matrix R;  ///< block diagonal noise covariance
  Vector y;
  std::vector<Index> var_offset;     ///< column offset of each variable (model order)
  std::vector<Index> factor_offset;  ///< row offset of each factor (model order)
};

GlobalSystem stack_global(const LinearGaussianModel& model);

struct CentralizedSolution {
  Vector mean;                 ///< stacked x_hat
  Matrix posterior_precision;  ///< W^{-1} + A^T R^{-1} A
  Matrix posterior_cov;
  std::vector<int> var_ids;
  std::vector<Index> var_offset;

  Vector mean_of(int id) const;
  Matrix cov_of(int id) const;
};

class Unobservable : public Error {
 public:
  using Error::Error;
};

/// Exact MMSE estimate (W^{-1} + A^T R^{-1} A)^{-1} A^T R^{-1} y.
/// The prior makes the posterior precision pd even when the stacked A is
/// column-rank deficient (fewer observations than unknowns); Unobservable is
/// thrown only if it is not.
CentralizedSolution centralized_solve(const LinearGaussianModel& model);

/// Removes a noiseless factor n (R_n = 0) by substituting
///   x_n = A_{n,n}^{-1} (y_n - sum_{i != n} A_{n,i} x_i)
/// into every factor containing n. The prior of x_n becomes a factor with id n
/// over the remaining scope of n (omitted if that scope is empty).
LinearGaussianModel eliminate_noiseless_factor(const LinearGaussianModel& model, int n);

enum class TopologyKind { kForest, kSingleLoopPlusForest, kMultiLoop };

const char* to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& s);

struct RandomModelOptions {
  std::uint64_t seed = 1;
  int num_agents = 1;
  Index min_dim = 1;
  Index max_dim = 1;
  std::vector<Index> dims;  ///< explicit per-agent dims; overrides min/max when non-empty
  TopologyKind topology = TopologyKind::kForest;
  double coeff_scale = 1.0;
  double noise_scale = 1.0;
};

/// Seeded random model whose factor graph has the requested topology class.
/// Throws Error for infeasible requests (e.g. a loop with a single agent).
LinearGaussianModel random_model(const RandomModelOptions& opts);

}  // namespace gabp
