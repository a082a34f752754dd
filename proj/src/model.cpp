#include "gabp/model.hpp"

#include "gabp/numerics.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace gabp {

namespace {

std::string loc(int n, int i) {
  return "(" + std::to_string(n) + "," + std::to_string(i) + ")";
}

void add_issue(ValidationReport& r, IssueKind kind, std::optional<int> factor,
               std::optional<int> variable, std::string message) {
  r.issues.push_back({kind, factor, variable, std::move(message)});
}

}  // namespace

const VariableSpec* LinearGaussianModel::find_variable(int id) const {
  auto it = std::find_if(variables.begin(), variables.end(),
                         [id](const VariableSpec& v) { return v.id == id; });
  return it == variables.end() ? nullptr : &*it;
}

const FactorSpec* LinearGaussianModel::find_factor(int id) const {
  auto it = std::find_if(factors.begin(), factors.end(),
                         [id](const FactorSpec& f) { return f.id == id; });
  return it == factors.end() ? nullptr : &*it;
}

const VariableSpec& LinearGaussianModel::variable(int id) const {
  const auto* v = find_variable(id);
  if (v == nullptr) throw Error("unknown variable " + std::to_string(id));
  return *v;
}

const FactorSpec& LinearGaussianModel::factor(int id) const {
  const auto* f = find_factor(id);
  if (f == nullptr) throw Error("unknown factor " + std::to_string(id));
  return *f;
}

Index LinearGaussianModel::total_dim() const {
  Index n = 0;
  for (const auto& v : variables) n += v.dim;
  return n;
}

Index LinearGaussianModel::total_obs_dim() const {
  Index n = 0;
  for (const auto& f : factors) n += f.obs_dim();
  return n;
}

bool LinearGaussianModel::operator==(const LinearGaussianModel& other) const {
  if (variables.size() != other.variables.size() || factors.size() != other.factors.size()) {
    return false;
  }
  for (std::size_t k = 0; k < variables.size(); ++k) {
    const auto& a = variables[k];
    const auto& b = other.variables[k];
    if (a.id != b.id || a.dim != b.dim || a.prior_cov.rows() != b.prior_cov.rows() ||
        a.prior_cov.cols() != b.prior_cov.cols() || a.prior_cov != b.prior_cov) {
      return false;
    }
  }
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& a = factors[k];
    const auto& b = other.factors[k];
    if (a.id != b.id || a.scope != b.scope || a.obs.size() != b.obs.size() || a.obs != b.obs ||
        a.noise_cov.rows() != b.noise_cov.rows() || a.noise_cov.cols() != b.noise_cov.cols() ||
        a.noise_cov != b.noise_cov || a.coeff.size() != b.coeff.size()) {
      return false;
    }
    for (const auto& [id, m] : a.coeff) {
      auto it = b.coeff.find(id);
      if (it == b.coeff.end() || it->second.rows() != m.rows() || it->second.cols() != m.cols() ||
          it->second != m) {
        return false;
      }
    }
  }
  return true;
}

std::string ValidationReport::summary() const {
  if (issues.empty()) return "model valid";
  std::ostringstream os;
  for (std::size_t k = 0; k < issues.size(); ++k) {
    if (k) os << "; ";
    os << issues[k].message;
  }
  return os.str();
}

ValidationReport validate_model(const LinearGaussianModel& model) {
  ValidationReport r;
  if (model.variables.empty()) {
    add_issue(r, IssueKind::kEmptyModel, {}, {}, "model has no variables");
    return r;
  }
  std::set<int> var_ids;
  int prev_id = 0;
  for (const auto& v : model.variables) {
    if (!var_ids.insert(v.id).second) {
      add_issue(r, IssueKind::kDuplicateId, {}, v.id,
                "duplicate variable id " + std::to_string(v.id));
    }
    if (v.id < 1) {
      add_issue(r, IssueKind::kBadDimension, {}, v.id,
                "variable id " + std::to_string(v.id) + " must be positive");
    }
    if (v.id <= prev_id) {
      add_issue(r, IssueKind::kDuplicateId, {}, v.id,
                "variables not in ascending id order at " + std::to_string(v.id));
    }
    prev_id = v.id;
    if (v.dim < 1 || v.prior_cov.rows() != v.dim || v.prior_cov.cols() != v.dim) {
      add_issue(r, IssueKind::kBadDimension, {}, v.id,
                "prior_cov of variable " + std::to_string(v.id) + " is not " +
                    std::to_string(v.dim) + "x" + std::to_string(v.dim));
      continue;
    }
    if (!v.prior_cov.allFinite()) {
      add_issue(r, IssueKind::kNonFinite, {}, v.id,
                "prior_cov of variable " + std::to_string(v.id) + " has non-finite entries");
      continue;
    }
    if (asymmetry(v.prior_cov) > kSymmetryTolerance * std::max(1.0, v.prior_cov.cwiseAbs().maxCoeff())) {
      r.warnings.push_back("prior_cov of variable " + std::to_string(v.id) +
                           " asymmetric; symmetrized");
    }
    if (!is_pd(v.prior_cov)) {
      add_issue(r, IssueKind::kPriorNotPd, {}, v.id,
                "prior_cov not positive definite at variable " + std::to_string(v.id));
    }
  }

  std::set<int> factor_ids;
  prev_id = std::numeric_limits<int>::min();
  for (const auto& f : model.factors) {
    if (!factor_ids.insert(f.id).second) {
      add_issue(r, IssueKind::kDuplicateId, f.id, {},
                "duplicate factor id " + std::to_string(f.id));
    }
    if (f.id <= prev_id) {
      add_issue(r, IssueKind::kDuplicateId, f.id, {},
                "factors not in ascending id order at " + std::to_string(f.id));
    }
    prev_id = f.id;
    const Index m = f.obs_dim();
    if (f.scope.empty()) {
      add_issue(r, IssueKind::kScopeMismatch, f.id, {},
                "factor " + std::to_string(f.id) + " has empty scope");
    }
    if (!std::is_sorted(f.scope.begin(), f.scope.end()) ||
        std::adjacent_find(f.scope.begin(), f.scope.end()) != f.scope.end()) {
      add_issue(r, IssueKind::kScopeMismatch, f.id, {},
                "scope of factor " + std::to_string(f.id) + " must be strictly ascending");
    }
    std::set<int> keys;
    for (const auto& [id, a] : f.coeff) keys.insert(id);
    if (keys != std::set<int>(f.scope.begin(), f.scope.end())) {
      add_issue(r, IssueKind::kScopeMismatch, f.id, {},
                "coeff keys of factor " + std::to_string(f.id) + " do not match its scope");
    }
    if (m < 1) {
      add_issue(r, IssueKind::kBadDimension, f.id, {},
                "factor " + std::to_string(f.id) + " has empty observation");
    }
    if (!f.obs.allFinite()) {
      add_issue(r, IssueKind::kNonFinite, f.id, {},
                "obs of factor " + std::to_string(f.id) + " has non-finite entries");
    }
    if (f.noise_cov.rows() != m || f.noise_cov.cols() != m) {
      add_issue(r, IssueKind::kBadDimension, f.id, {},
                "noise_cov of factor " + std::to_string(f.id) + " is not " + std::to_string(m) +
                    "x" + std::to_string(m));
    } else if (!f.noise_cov.allFinite()) {
      add_issue(r, IssueKind::kNonFinite, f.id, {},
                "noise_cov of factor " + std::to_string(f.id) + " has non-finite entries");
    } else {
      if (m > 0 &&
          asymmetry(f.noise_cov) > kSymmetryTolerance * std::max(1.0, f.noise_cov.cwiseAbs().maxCoeff())) {
        r.warnings.push_back("noise_cov of factor " + std::to_string(f.id) +
                             " asymmetric; symmetrized");
      }
      if (!is_pd(f.noise_cov)) {
        add_issue(r, IssueKind::kNoiseNotPd, f.id, {},
                  "noise_cov not positive definite at factor " + std::to_string(f.id));
      }
    }
    for (const auto& [id, a] : f.coeff) {
      const auto* v = model.find_variable(id);
      if (v == nullptr) {
        add_issue(r, IssueKind::kUnknownVariable, f.id, id,
                  "factor " + std::to_string(f.id) + " references unknown variable " +
                      std::to_string(id));
        continue;
      }
      if (a.rows() != m || a.cols() != v->dim) {
        add_issue(r, IssueKind::kBadDimension, f.id, id,
                  "coeff at " + loc(f.id, id) + " is " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + ", expected " + std::to_string(m) + "x" +
                      std::to_string(v->dim));
        continue;
      }
      if (!a.allFinite()) {
        add_issue(r, IssueKind::kNonFinite, f.id, id,
                  "coeff at " + loc(f.id, id) + " has non-finite entries");
        continue;
      }
      if (!has_full_column_rank(a)) {
        add_issue(r, IssueKind::kRankDeficient, f.id, id, "rank deficient at " + loc(f.id, id));
      }
    }
  }
  return r;
}

ValidationReport network_form_issues(const LinearGaussianModel& model) {
  ValidationReport r;
  std::map<int, std::set<int>> neighbours;
  for (const auto& v : model.variables) {
    const auto* f = model.find_factor(v.id);
    if (f == nullptr) {
      add_issue(r, IssueKind::kNotNetworkForm, {}, v.id,
                "agent " + std::to_string(v.id) + " has no factor");
      continue;
    }
    if (!std::binary_search(f->scope.begin(), f->scope.end(), v.id)) {
      add_issue(r, IssueKind::kNotNetworkForm, f->id, v.id,
                "scope of factor " + std::to_string(f->id) + " does not contain its agent");
    }
    for (int i : f->scope) {
      if (i != v.id) neighbours[v.id].insert(i);
    }
  }
  for (const auto& f : model.factors) {
    if (model.find_variable(f.id) == nullptr) {
      add_issue(r, IssueKind::kNotNetworkForm, f.id, {},
                "factor " + std::to_string(f.id) + " has no matching agent");
    }
  }
  for (const auto& [n, nbrs] : neighbours) {
    for (int i : nbrs) {
      if (!neighbours[i].count(n)) {
        add_issue(r, IssueKind::kNotNetworkForm, n, i,
                  "neighbour relation not symmetric at " + loc(n, i));
      }
    }
  }
  return r;
}

InvalidModel::InvalidModel(ValidationReport report)
    : Error("invalid model: " + report.summary()), report_(std::move(report)) {}

void require_valid(const LinearGaussianModel& model) {
  auto report = validate_model(model);
  if (!report.ok()) throw InvalidModel(std::move(report));
}

GlobalSystem stack_global(const LinearGaussianModel& model) {
  require_valid(model);
  GlobalSystem g;
  std::map<int, Index> col_of;
  Index cols = 0;
  for (const auto& v : model.variables) {
    g.var_offset.push_back(cols);
    col_of[v.id] = cols;
    cols += v.dim;
  }
  Index rows = 0;
  for (const auto& f : model.factors) {
    g.factor_offset.push_back(rows);
    rows += f.obs_dim();
  }
  g.A = Matrix::Zero(rows, cols);
  g.W = Matrix::Zero(cols, cols);
  g.R = Matrix::Zero(rows, rows);
  g.y = Vector::Zero(rows);
  for (std::size_t k = 0; k < model.variables.size(); ++k) {
    const auto& v = model.variables[k];
    g.W.block(g.var_offset[k], g.var_offset[k], v.dim, v.dim) = symmetrize(v.prior_cov);
  }
  for (std::size_t k = 0; k < model.factors.size(); ++k) {
    const auto& f = model.factors[k];
    const Index r0 = g.factor_offset[k];
    const Index m = f.obs_dim();
    g.R.block(r0, r0, m, m) = symmetrize(f.noise_cov);
    g.y.segment(r0, m) = f.obs;
    for (const auto& [id, a] : f.coeff) g.A.block(r0, col_of.at(id), m, a.cols()) = a;
  }
  return g;
}

Vector CentralizedSolution::mean_of(int id) const {
  for (std::size_t k = 0; k < var_ids.size(); ++k) {
    if (var_ids[k] == id) {
      const Index end = k + 1 < var_offset.size() ? var_offset[k + 1] : mean.size();
      return mean.segment(var_offset[k], end - var_offset[k]);
    }
  }
  throw Error("unknown variable " + std::to_string(id));
}

Matrix CentralizedSolution::cov_of(int id) const {
  for (std::size_t k = 0; k < var_ids.size(); ++k) {
    if (var_ids[k] == id) {
      const Index end = k + 1 < var_offset.size() ? var_offset[k + 1] : mean.size();
      const Index d = end - var_offset[k];
      return posterior_cov.block(var_offset[k], var_offset[k], d, d);
    }
  }
  throw Error("unknown variable " + std::to_string(id));
}

CentralizedSolution centralized_solve(const LinearGaussianModel& model) {
  const GlobalSystem g = stack_global(model);

  // Block-diagonal inverses, factored per block.
  Matrix w_inv = Matrix::Zero(g.W.rows(), g.W.cols());
  for (std::size_t k = 0; k < model.variables.size(); ++k) {
    const Index o = g.var_offset[k];
    const Index d = model.variables[k].dim;
    w_inv.block(o, o, d, d) = spd_inverse(g.W.block(o, o, d, d), "prior_cov");
  }
  Matrix rinv_a(g.A.rows(), g.A.cols());
  Vector rinv_y(g.y.size());
  for (std::size_t k = 0; k < model.factors.size(); ++k) {
    const Index o = g.factor_offset[k];
    const Index m = model.factors[k].obs_dim();
    Eigen::LLT<Matrix> llt(g.R.block(o, o, m, m));
    if (llt.info() != Eigen::Success) throw NumericError("noise_cov not positive definite");
    rinv_a.middleRows(o, m) = llt.solve(g.A.middleRows(o, m));
    rinv_y.segment(o, m) = llt.solve(g.y.segment(o, m));
  }

  CentralizedSolution s;
  s.posterior_precision = symmetrize(w_inv + g.A.transpose() * rinv_a);
  Eigen::LLT<Matrix> post(s.posterior_precision);
  if (post.info() != Eigen::Success || !is_pd(s.posterior_precision)) {
    throw Unobservable("global model unobservable");
  }
  s.mean = post.solve(g.A.transpose() * rinv_y);
  s.posterior_cov = symmetrize(post.solve(Matrix::Identity(g.A.cols(), g.A.cols())));
  for (const auto& v : model.variables) s.var_ids.push_back(v.id);
  s.var_offset = g.var_offset;
  return s;
}

LinearGaussianModel eliminate_noiseless_factor(const LinearGaussianModel& model, int n) {
  const FactorSpec* target = model.find_factor(n);
  if (target == nullptr) throw Error("no factor with id " + std::to_string(n));
  if (!target->noise_cov.isZero(0.0)) {
    throw Error("factor " + std::to_string(n) + " is not declared noiseless (R_n != 0)");
  }
  auto own = target->coeff.find(n);
  if (own == target->coeff.end() || model.find_variable(n) == nullptr) {
    throw Error("cannot eliminate: A_{n,n} not invertible");
  }
  const Matrix& a_nn = own->second;
  if (a_nn.rows() != a_nn.cols() || !has_full_column_rank(a_nn)) {
    throw Error("cannot eliminate: A_{n,n} not invertible");
  }
  Eigen::FullPivLU<Matrix> lu(a_nn);
  const Vector pinned = lu.solve(target->obs);  // c
  std::map<int, Matrix> gain;                   // G_i = -A_nn^{-1} A_ni
  for (const auto& [i, a] : target->coeff) {
    if (i != n) gain[i] = -lu.solve(a);
  }

  LinearGaussianModel out;
  for (const auto& v : model.variables) {
    if (v.id != n) out.variables.push_back(v);
  }

  const double drop_tol = 1e-14;
  for (const auto& f : model.factors) {
    if (f.id == n) continue;
    auto it = f.coeff.find(n);
    if (it == f.coeff.end()) {
      out.factors.push_back(f);
      continue;
    }
    const Matrix& a_kn = it->second;
    FactorSpec g;
    g.id = f.id;
    g.noise_cov = f.noise_cov;
    g.obs = f.obs - a_kn * pinned;
    std::map<int, Matrix> coeff;
    for (const auto& [i, a] : f.coeff) {
      if (i != n) coeff[i] = a;
    }
    for (const auto& [i, gi] : gain) {
      Matrix add = a_kn * gi;
      auto c = coeff.find(i);
      if (c == coeff.end()) {
        coeff[i] = add;
      } else {
        c->second += add;
      }
    }
    for (auto& [i, a] : coeff) {
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      if (a.cwiseAbs().maxCoeff() <= drop_tol * scale) continue;
      g.coeff[i] = a;
      g.scope.push_back(i);
    }
    if (!g.scope.empty()) out.factors.push_back(std::move(g));
  }

  // The prior of x_n expressed in the surviving variables:
  //   -c = sum_i G_i x_i + e,  e ~ N(0, W_n).
  if (!gain.empty()) {
    FactorSpec p;
    p.id = n;
    p.noise_cov = model.variable(n).prior_cov;
    p.obs = -pinned;
    for (const auto& [i, gi] : gain) {
      p.scope.push_back(i);
      p.coeff[i] = gi;
    }
    out.factors.push_back(std::move(p));
  }
  std::sort(out.factors.begin(), out.factors.end(),
            [](const FactorSpec& a, const FactorSpec& b) { return a.id < b.id; });
  return out;
}

const char* to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kForest: return "forest";
    case TopologyKind::kSingleLoopPlusForest: return "single_loop_plus_forest";
    case TopologyKind::kMultiLoop: return "multi_loop";
  }
  return "?";
}

TopologyKind topology_kind_from_string(const std::string& s) {
  if (s == "forest") return TopologyKind::kForest;
  if (s == "single_loop_plus_forest" || s == "single-loop" || s == "single_loop") {
    return TopologyKind::kSingleLoopPlusForest;
  }
  if (s == "multi_loop" || s == "multi-loop") return TopologyKind::kMultiLoop;
  throw Error("unknown topology '" + s + "'");
}

namespace {

class ModelSampler {
 public:
  explicit ModelSampler(const RandomModelOptions& opts) : opts_(opts), rng_(opts.seed) {}

  double normal() { return normal_(rng_); }
  double uniform() { return uniform_(rng_); }
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Matrix gaussian(Index r, Index c) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }

  /// Gaussian block resampled until sigma_min / sigma_max >= 1e-2, so that
  /// A^T R^{-1} A stays far from the pd tolerance.
  Matrix coefficient(Index r, Index c) {
    Matrix m = gaussian(r, c);
    for (int tries = 0; tries < 100 && column_rank_ratio(m) < 1e-2; ++tries) m = gaussian(r, c);
    return m;
  }

  /// 0.5 I + G G^T / n, well conditioned and strictly pd.
  Matrix spd(Index n) {
    const Matrix g = gaussian(n, n);
    return symmetrize(0.5 * Matrix::Identity(n, n) + g * g.transpose() / double(n));
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  const RandomModelOptions& opts_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Random spanning forest over variables 1..M expressed as factor scopes.
/// Every variable is covered; scopes hold at most `max_scope` variables.
std::vector<std::vector<int>> tree_scopes(ModelSampler& s, int M, bool allow_split) {
  constexpr std::size_t max_scope = 3;
  std::vector<std::vector<int>> scopes;
  std::vector<int> component(M + 1, 0);
  scopes.push_back({1});
  component[1] = 0;
  int components = 1;
  for (int v = 2; v <= M; ++v) {
    const double u = s.uniform();
    if (allow_split && u < 0.12) {
      scopes.push_back({v});
      component[v] = components++;
      continue;
    }
    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < scopes.size(); ++k) {
      if (scopes[k].size() < max_scope) open.push_back(k);
    }
    if (!open.empty() && u < 0.5) {
      auto& sc = scopes[open[s.pick(0, int(open.size()) - 1)]];
      component[v] = component[sc.front()];
      sc.push_back(v);
    } else {
      const int anchor = s.pick(1, v - 1);
      component[v] = component[anchor];
      scopes.push_back({anchor, v});
    }
  }
  // Extra unary observations keep the forest property.
  for (int v = 1; v <= M; ++v) {
    if (s.uniform() < 0.25) scopes.push_back({v});
  }
  for (auto& sc : scopes) std::sort(sc.begin(), sc.end());
  return scopes;
}

}  // namespace

LinearGaussianModel random_model(const RandomModelOptions& opts) {
  const int M = opts.num_agents;
  if (M < 1) throw Error("random_model: need at least one agent");
  if (!opts.dims.empty() && int(opts.dims.size()) != M) {
    throw Error("random_model: dims must list one entry per agent");
  }
  if (opts.dims.empty() && (opts.min_dim < 1 || opts.max_dim < opts.min_dim)) {
    throw Error("random_model: invalid dimension range");
  }
  for (Index d : opts.dims) {
    if (d < 1) throw Error("random_model: dims must be >= 1");
  }
  if (opts.topology == TopologyKind::kSingleLoopPlusForest && M < 2) {
    throw Error("random_model: a single loop needs at least 2 agents");
  }
  if (opts.topology == TopologyKind::kMultiLoop && M < 2) {
    throw Error("random_model: multiple loops need at least 2 agents");
  }
  if (!(opts.coeff_scale > 0) || !(opts.noise_scale > 0)) {
    throw Error("random_model: scales must be positive");
  }

  ModelSampler s(opts);
  std::vector<Index> dims(M + 1, 0);
  for (int v = 1; v <= M; ++v) {
    dims[v] = opts.dims.empty() ? s.pick(int(opts.min_dim), int(opts.max_dim)) : opts.dims[v - 1];
  }

  // Factor scopes, plus a flag for the one-factor-per-agent network form.
  std::vector<std::vector<int>> scopes;
  bool network_form = false;
  switch (opts.topology) {
    case TopologyKind::kForest:
      scopes = tree_scopes(s, M, true);
      break;
    case TopologyKind::kSingleLoopPlusForest: {
      scopes = tree_scopes(s, M, false);
      int a = s.pick(1, M);
      int b = s.pick(1, M - 1);
      if (b >= a) ++b;
      scopes.push_back({std::min(a, b), std::max(a, b)});
      break;
    }
    case TopologyKind::kMultiLoop: {
      if (M == 2) {
        scopes = tree_scopes(s, M, false);
        scopes.push_back({1, 2});
        scopes.push_back({1, 2});
        break;
      }
      network_form = true;
      std::vector<std::set<int>> nbr(M + 1);
      for (int v = 2; v <= M; ++v) {
        const int u = s.pick(1, v - 1);
        nbr[u].insert(v);
        nbr[v].insert(u);
      }
      for (int u = 1; u <= M; ++u) {
        for (int v = u + 1; v <= M; ++v) {
          if (s.uniform() < 0.3) {
            nbr[u].insert(v);
            nbr[v].insert(u);
          }
        }
      }
      for (int n = 1; n <= M; ++n) {
        std::vector<int> sc{n};
        sc.insert(sc.end(), nbr[n].begin(), nbr[n].end());
        std::sort(sc.begin(), sc.end());
        scopes.push_back(sc);
      }
      break;
    }
  }

  LinearGaussianModel model;
  for (int v = 1; v <= M; ++v) model.variables.push_back({v, dims[v], s.spd(dims[v])});

  // Ground truth drawn from the prior; observations follow the model.
  std::vector<Vector> truth(M + 1);
  for (int v = 1; v <= M; ++v) {
    Eigen::LLT<Matrix> llt(model.variables[v - 1].prior_cov);
    truth[v] = llt.matrixL() * s.gaussian(dims[v], 1).col(0);
  }

  int next_id = 1;
  for (const auto& sc : scopes) {
    // In network form the scopes were emitted for agents 1..M in order, so the
    // running id is also the owning agent.
    FactorSpec f;
    f.id = next_id++;
    f.scope = sc;
    Index m = 0;
    if (network_form) {
      for (int i : sc) m = std::max(m, dims[i]);
    } else {
      for (int i : sc) m += dims[i];
    }
    for (int i : sc) f.coeff[i] = opts.coeff_scale * s.coefficient(m, dims[i]);
    f.noise_cov = opts.noise_scale * opts.noise_scale * s.spd(m);
    Eigen::LLT<Matrix> llt(f.noise_cov);
    f.obs = llt.matrixL() * s.gaussian(m, 1).col(0);
    for (int i : sc) f.obs += f.coeff[i] * truth[i];
    model.factors.push_back(std::move(f));
  }
  return model;
}

}  // namespace gabp
