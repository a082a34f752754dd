#include "gabp/bp.hpp"

#include "gabp/analysis.hpp"
#include "gabp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gabp {

GaussianFactorGraph::GaussianFactorGraph(LinearGaussianModel model)
    : model_(std::move(model)), graph_(build_factor_graph(model_)), edges_(canonical_edge_order(graph_)) {
  for (const auto& v : model_.variables) prior_info_.push_back(spd_inverse(v.prior_cov, "prior_cov"));
}

const Matrix& GaussianFactorGraph::coeff(int factor_pos, int var_pos) const {
  return model_.factors[factor_pos].coeff.at(graph_.var_ids[var_pos]);
}

MessageUndefined::MessageUndefined(const std::string& what, int factor_id, int var_id,
                                   bool strict_check)
    : Error(what), factor_id_(factor_id), var_id_(var_id), strict_(strict_check) {}

const char* to_string(InitKind kind) {
  switch (kind) {
    case InitKind::kZero: return "zero";
    case InitKind::kLowerBound: return "lower";
    case InitKind::kUpperBound: return "upper";
    case InitKind::kCustom: return "custom";
  }
  return "?";
}

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kSynchronous: return "sync";
    case ScheduleKind::kSequentialAscending: return "seq";
    case ScheduleKind::kRandomPermutation: return "random";
  }
  return "?";
}

const char* to_string(BpStatus status) {
  switch (status) {
    case BpStatus::kConverged: return "converged";
    case BpStatus::kMaxIters: return "max_iters";
    case BpStatus::kDiverged: return "diverged";
  }
  return "?";
}

namespace {

std::string edge_name(const GaussianFactorGraph& gfg, int n, int i) {
  return "(" + std::to_string(gfg.graph().factor_ids[n]) + "," +
         std::to_string(gfg.graph().var_ids[i]) + ")";
}

[[noreturn]] void undefined(const GaussianFactorGraph& gfg, int n, int i, const std::string& why,
                            bool strict) {
  throw MessageUndefined("message undefined at f2v edge " + edge_name(gfg, n, i) + ": " + why,
                         gfg.graph().factor_ids[n], gfg.graph().var_ids[i], strict);
}

// ---- J-only pieces ------------------------------------------------------

Matrix v2f_J(const GaussianFactorGraph& gfg, const std::vector<Matrix>& f2v_J, int j, int n) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  Matrix J = gfg.prior_info(j);
  for (std::size_t s = 0; s < g.var_nbrs[j].size(); ++s) {
    const int k = g.var_nbrs[j][s];
    if (k == n) continue;
    J += f2v_J[e.f2v_index(g, k, j)];
  }
  return J;
}

/// J^{-1} via LLT; nullopt when J is not pd.
std::optional<Matrix> try_inverse(const Matrix& J) {
  Eigen::LLT<Matrix> llt(J);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Matrix inv = llt.solve(Matrix::Identity(J.rows(), J.cols()));
  return Matrix(0.5 * (inv + inv.transpose()));
}

struct FactorCore {
  Eigen::LLT<Matrix> S;  ///< factorization of R_n + sum_{j != i} A J^{-1} A^T
  Matrix J;              ///< A_{n,i}^T S^{-1} A_{n,i}
  Matrix SinvA;          ///< S^{-1} A_{n,i}
};

FactorCore f2v_core(const GaussianFactorGraph& gfg, const std::vector<Matrix>& v2f_cov, int n,
                    int i) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  const FactorSpec& f = gfg.factor_at(n);
  Matrix S = f.noise_cov;
  for (int j : g.factor_nbrs[n]) {
    if (j == i) continue;
    const Matrix& a = gfg.coeff(n, j);
    S += a * v2f_cov[e.v2f_index(g, j, n)] * a.transpose();
  }
  S = 0.5 * (S + S.transpose());
  FactorCore core;
  core.S.compute(S);
  if (core.S.info() != Eigen::Success || !is_pd(S)) {
    undefined(gfg, n, i, "inner covariance not positive definite", false);
  }
  const Matrix& a_ni = gfg.coeff(n, i);
  core.SinvA = core.S.solve(a_ni);
  core.J = a_ni.transpose() * core.SinvA;
  core.J = (0.5 * (core.J + core.J.transpose())).eval();
  return core;
}

std::vector<Matrix> v2f_covariances(const GaussianFactorGraph& gfg,
                                    const std::vector<Message>& v2f) {
  const auto& e = gfg.edges();
  std::vector<Matrix> cov(v2f.size());
  for (std::size_t k = 0; k < v2f.size(); ++k) {
    auto inv = try_inverse(v2f[k].J);
    if (!inv) {
      const auto& ref = e.v2f[k];
      throw MessageUndefined(
          "variable-to-factor information matrix singular at (" +
              std::to_string(gfg.graph().var_ids[ref.var]) + "," +
              std::to_string(gfg.graph().factor_ids[ref.factor]) + ")",
          gfg.graph().factor_ids[ref.factor], gfg.graph().var_ids[ref.var], false);
    }
    cov[k] = std::move(*inv);
  }
  return cov;
}

// ---- full messages ------------------------------------------------------

Message v2f_message(const GaussianFactorGraph& gfg, const std::vector<Message>& f2v, int j, int n) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  Message out;
  out.J = gfg.prior_info(j);
  Vector h = Vector::Zero(gfg.var_dim(j));
  for (int k : g.var_nbrs[j]) {
    if (k == n) continue;
    const Message& in = f2v[e.f2v_index(g, k, j)];
    out.J += in.J;
    h += in.J * in.v;
  }
  out.J = (0.5 * (out.J + out.J.transpose())).eval();
  Eigen::LLT<Matrix> llt(out.J);
  if (llt.info() != Eigen::Success) {
    throw MessageUndefined("variable-to-factor information matrix singular at (" +
                               std::to_string(g.var_ids[j]) + "," +
                               std::to_string(g.factor_ids[n]) + ")",
                           g.factor_ids[n], g.var_ids[j], false);
  }
  out.v = llt.solve(h);
  return out;
}

Message f2v_message(const GaussianFactorGraph& gfg, const std::vector<Message>& v2f,
                    const std::vector<Matrix>& v2f_cov, int n, int i) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  const FactorSpec& f = gfg.factor_at(n);
  FactorCore core = f2v_core(gfg, v2f_cov, n, i);
  Vector r = f.obs;
  for (int j : g.factor_nbrs[n]) {
    if (j == i) continue;
    r -= gfg.coeff(n, j) * v2f[e.v2f_index(g, j, n)].v;
  }
  Message out;
  out.J = std::move(core.J);
  Eigen::LLT<Matrix> llt(out.J);
  if (llt.info() != Eigen::Success) undefined(gfg, n, i, "outgoing information singular", false);
  out.v = llt.solve(core.SinvA.transpose() * r);
  return out;
}

bool existence_at(const GaussianFactorGraph& gfg, const std::vector<Message>& v2f, int n, int i) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  const FactorSpec& f = gfg.factor_at(n);
  std::vector<int> excl;
  Index dim = 0;
  for (int j : g.factor_nbrs[n]) {
    if (j == i) continue;
    excl.push_back(j);
    dim += gfg.var_dim(j);
  }
  if (excl.empty()) return true;
  Matrix a_e(f.obs_dim(), dim);
  Matrix jb = Matrix::Zero(dim, dim);
  Index off = 0;
  for (int j : excl) {
    const Index d = gfg.var_dim(j);
    a_e.middleCols(off, d) = gfg.coeff(n, j);
    jb.block(off, off, d, d) = v2f[e.v2f_index(g, j, n)].J;
    off += d;
  }
  Eigen::LLT<Matrix> r(f.noise_cov);
  if (r.info() != Eigen::Success) return false;
  const Matrix lambda = a_e.transpose() * r.solve(a_e) + jb;
  return is_pd(lambda);
}

double max_abs(const std::vector<Message>& msgs) {
  double m = 0;
  for (const auto& msg : msgs) {
    if (!msg.v.allFinite() || !msg.J.allFinite()) return std::numeric_limits<double>::infinity();
    if (msg.v.size()) m = std::max(m, msg.v.cwiseAbs().maxCoeff());
  }
  return m;
}

void check_custom(const GaussianFactorGraph& gfg, const std::vector<Matrix>& J) {
  const auto& e = gfg.edges();
  if (J.size() != e.f2v.size()) {
    throw InvalidInit("custom init needs " + std::to_string(e.f2v.size()) +
                      " matrices, got " + std::to_string(J.size()));
  }
  for (std::size_t k = 0; k < J.size(); ++k) {
    const Index d = gfg.var_dim(e.f2v[k].var);
    if (J[k].rows() != d || J[k].cols() != d) {
      throw InvalidInit("custom init matrix " + std::to_string(k) + " has wrong dimension");
    }
    if (!is_psd(J[k])) {
      throw InvalidInit("custom init matrix at f2v edge " +
                        edge_name(gfg, e.f2v[k].factor, e.f2v[k].var) +
                        " is not positive semidefinite");
    }
  }
}

double min_eig_over(const std::vector<Message>& msgs) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& msg : msgs) m = std::min(m, min_eig(msg.J));
  return m;
}

void strict_pd_check(const GaussianFactorGraph& gfg, const MessageSet& msgs) {
  const auto& e = gfg.edges();
  const auto& g = gfg.graph();
  for (std::size_t k = 0; k < msgs.f2v.size(); ++k) {
    if (!is_pd(msgs.f2v[k].J)) {
      throw MessageUndefined("f2v information matrix not positive definite at " +
                                 edge_name(gfg, e.f2v[k].factor, e.f2v[k].var),
                             g.factor_ids[e.f2v[k].factor], g.var_ids[e.f2v[k].var], true);
    }
  }
  for (std::size_t k = 0; k < msgs.v2f.size(); ++k) {
    if (!is_pd(msgs.v2f[k].J)) {
      throw MessageUndefined("v2f information matrix not positive definite at " +
                                 edge_name(gfg, e.v2f[k].factor, e.v2f[k].var),
                             g.factor_ids[e.v2f[k].factor], g.var_ids[e.v2f[k].var], true);
    }
  }
}

void update_factor(const GaussianFactorGraph& gfg, const std::vector<Message>& v2f_src,
                   const std::vector<Matrix>& cov, int n, bool strict, std::vector<Message>& f2v_dst) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  for (int i : g.factor_nbrs[n]) {
    if (strict && !existence_at(gfg, v2f_src, n, i)) {
      throw MessageUndefined("existence condition violated at f2v edge " + edge_name(gfg, n, i),
                             g.factor_ids[n], g.var_ids[i], true);
    }
    f2v_dst[e.f2v_index(g, n, i)] = f2v_message(gfg, v2f_src, cov, n, i);
  }
}

}  // namespace

MessageSet init_messages(const GaussianFactorGraph& gfg, const InitStrategy& init) {
  const auto& e = gfg.edges();
  MessageSet m;
  m.f2v.resize(e.f2v.size());
  std::vector<Matrix> J;
  switch (init.kind) {
    case InitKind::kZero:
      for (const auto& ref : e.f2v) {
        const Index d = gfg.var_dim(ref.var);
        J.push_back(Matrix::Zero(d, d));
      }
      break;
    case InitKind::kLowerBound:
      J = compute_bounds(gfg).lower;
      break;
    case InitKind::kUpperBound:
      J = compute_bounds(gfg).upper;
      break;
    case InitKind::kCustom:
      check_custom(gfg, init.custom_J);
      J = init.custom_J;
      break;
  }
  if (!init.initial_v.empty() && init.initial_v.size() != e.f2v.size()) {
    throw InvalidInit("initial means must cover every f2v edge");
  }
  for (std::size_t k = 0; k < e.f2v.size(); ++k) {
    const Index d = gfg.var_dim(e.f2v[k].var);
    m.f2v[k].J = symmetrize(J[k]);
    m.f2v[k].v = init.initial_v.empty() ? Vector::Zero(d) : init.initial_v[k];
    if (m.f2v[k].v.size() != d) throw InvalidInit("initial mean has wrong dimension");
  }
  for (const auto& ref : e.v2f) {
    m.v2f.push_back({gfg.prior_info(ref.var), Vector::Zero(gfg.var_dim(ref.var))});
  }
  return m;
}

Message var_to_factor(const GaussianFactorGraph& gfg, const MessageSet& msgs, int var_id,
                      int factor_id) {
  const auto& g = gfg.graph();
  const int j = g.var_pos(var_id);
  const int n = g.factor_pos(factor_id);
  gfg.edges().v2f_index(g, j, n);  // validates adjacency
  return v2f_message(gfg, msgs.f2v, j, n);
}

Message factor_to_var(const GaussianFactorGraph& gfg, const MessageSet& msgs, int factor_id,
                      int var_id) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  const int n = g.factor_pos(factor_id);
  const int i = g.var_pos(var_id);
  e.f2v_index(g, n, i);
  std::vector<Matrix> cov(msgs.v2f.size());
  for (int j : g.factor_nbrs[n]) {
    if (j == i) continue;
    const int k = e.v2f_index(g, j, n);
    auto inv = try_inverse(msgs.v2f[k].J);
    if (!inv) undefined(gfg, n, i, "incoming information matrix not positive definite", false);
    cov[k] = std::move(*inv);
  }
  return f2v_message(gfg, msgs.v2f, cov, n, i);
}

bool existence_check(const GaussianFactorGraph& gfg, const MessageSet& msgs, int factor_id,
                     int var_id) {
  const auto& g = gfg.graph();
  const int n = g.factor_pos(factor_id);
  const int i = g.var_pos(var_id);
  gfg.edges().f2v_index(g, n, i);
  return existence_at(gfg, msgs.v2f, n, i);
}

std::vector<Matrix> v2f_information(const GaussianFactorGraph& gfg,
                                    const std::vector<Matrix>& f2v_J) {
  const auto& e = gfg.edges();
  std::vector<Matrix> out;
  out.reserve(e.v2f.size());
  for (const auto& ref : e.v2f) out.push_back(v2f_J(gfg, f2v_J, ref.var, ref.factor));
  return out;
}

std::vector<Matrix> information_map(const GaussianFactorGraph& gfg,
                                    const std::vector<Matrix>& f2v_J) {
  const auto& e = gfg.edges();
  const auto v2f = v2f_information(gfg, f2v_J);
  std::vector<Matrix> cov(v2f.size());
  for (std::size_t k = 0; k < v2f.size(); ++k) {
    auto inv = try_inverse(v2f[k]);
    if (!inv) throw NumericError("information map: v2f information not positive definite");
    cov[k] = std::move(*inv);
  }
  std::vector<Matrix> out(e.f2v.size());
  for (std::size_t k = 0; k < e.f2v.size(); ++k) {
    out[k] = f2v_core(gfg, cov, e.f2v[k].factor, e.f2v[k].var).J;
  }
  return out;
}

std::vector<Belief> compute_beliefs(const GaussianFactorGraph& gfg, const MessageSet& msgs) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  std::vector<Belief> out;
  for (int i = 0; i < g.num_vars(); ++i) {
    Matrix info = gfg.prior_info(i);
    Vector h = Vector::Zero(gfg.var_dim(i));
    for (int n : g.var_nbrs[i]) {
      const Message& m = msgs.f2v[e.f2v_index(g, n, i)];
      info += m.J;
      h += m.J * m.v;
    }
    info = (0.5 * (info + info.transpose())).eval();
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success) {
      throw NumericError("belief precision singular at variable " + std::to_string(g.var_ids[i]));
    }
    Belief b;
    b.var_id = g.var_ids[i];
    b.cov = llt.solve(Matrix::Identity(info.rows(), info.cols()));
    b.cov = (0.5 * (b.cov + b.cov.transpose())).eval();
    b.mean = llt.solve(h);
    out.push_back(std::move(b));
  }
  return out;
}

MessageSet synchronous_step(const GaussianFactorGraph& gfg, const MessageSet& prev,
                            const std::vector<int>& f2v_order, bool strict) {
  const auto& e = gfg.edges();
  const auto& g = gfg.graph();
  MessageSet next;
  next.iteration = prev.iteration + 1;
  next.v2f.resize(e.v2f.size());
  for (std::size_t k = 0; k < e.v2f.size(); ++k) {
    next.v2f[k] = v2f_message(gfg, prev.f2v, e.v2f[k].var, e.v2f[k].factor);
  }
  const auto cov = v2f_covariances(gfg, next.v2f);
  next.f2v.resize(e.f2v.size());
  for (int k : f2v_order) {
    const int n = e.f2v[k].factor;
    const int i = e.f2v[k].var;
    if (strict && !existence_at(gfg, next.v2f, n, i)) {
      throw MessageUndefined("existence condition violated at f2v edge " + edge_name(gfg, n, i),
                             g.factor_ids[n], g.var_ids[i], true);
    }
    next.f2v[k] = f2v_message(gfg, next.v2f, cov, n, i);
  }
  return next;
}

double stacked_part_metric(const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
  if (x.size() != y.size()) throw NumericError("stacked_part_metric: size mismatch");
  double d = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!is_pd(x[k]) || !is_pd(y[k])) return std::numeric_limits<double>::infinity();
    d = std::max(d, part_metric(x[k], y[k]));
  }
  return d;
}

BpResult run_bp(const GaussianFactorGraph& gfg, const RunOptions& opts) {
  if (!(opts.tol_J > 0) || !(opts.tol_v > 0)) throw Error("tolerances must be positive");
  if (opts.max_iters < 1) throw Error("max_iters must be >= 1");
  const auto& e = gfg.edges();
  const auto& g = gfg.graph();

  BpResult res;
  MessageSet cur = init_messages(gfg, opts.init);

  std::vector<Matrix> ref_v2f;
  auto f2v_J_of = [](const std::vector<Message>& msgs) {
    std::vector<Matrix> out;
    out.reserve(msgs.size());
    for (const auto& m : msgs) out.push_back(m.J);
    return out;
  };
  auto ref_metric = [&](const MessageSet& m) {
    if (!opts.reference_J) return std::numeric_limits<double>::quiet_NaN();
    return stacked_part_metric(f2v_J_of(m.f2v), *opts.reference_J);
  };
  if (opts.reference_J) {
    if (opts.reference_J->size() != e.f2v.size()) throw Error("reference_J size mismatch");
    ref_v2f = v2f_information(gfg, *opts.reference_J);
  }

  res.trajectory.iterations.push_back({0, 0.0, 0.0, ref_metric(cur)});

  std::vector<int> canonical(e.f2v.size());
  std::iota(canonical.begin(), canonical.end(), 0);
  std::vector<int> factor_order(g.num_factors());
  std::iota(factor_order.begin(), factor_order.end(), 0);
  std::mt19937_64 rng(opts.schedule.seed);

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    MessageSet next;
    if (opts.schedule.kind == ScheduleKind::kSynchronous) {
      next = synchronous_step(gfg, cur, canonical, opts.strict);
    } else {
      next = cur;
      next.iteration = cur.iteration + 1;
      if (opts.schedule.kind == ScheduleKind::kRandomPermutation) {
        std::shuffle(factor_order.begin(), factor_order.end(), rng);
      }
      for (int n : factor_order) {
        std::vector<Matrix> cov(next.v2f.size());
        for (int j : g.factor_nbrs[n]) {
          const int k = e.v2f_index(g, j, n);
          next.v2f[k] = v2f_message(gfg, next.f2v, j, n);
          auto inv = try_inverse(next.v2f[k].J);
          if (!inv) {
            throw MessageUndefined("variable-to-factor information matrix singular",
                                   g.factor_ids[n], g.var_ids[j], false);
          }
          cov[k] = std::move(*inv);
        }
        update_factor(gfg, next.v2f, cov, n, opts.strict, next.f2v);
      }
    }

    if (opts.strict) {
      strict_pd_check(gfg, next);
      res.min_message_eig =
          std::min({res.min_message_eig, min_eig_over(next.f2v), min_eig_over(next.v2f)});
    }

    IterationRecord rec;
    rec.iteration = iter;
    for (std::size_t k = 0; k < e.f2v.size(); ++k) {
      const double dJ = (next.f2v[k].J - cur.f2v[k].J).norm();
      const double dv = (next.f2v[k].v - cur.f2v[k].v).cwiseAbs().maxCoeff();
      rec.max_dJ_rel = std::max(rec.max_dJ_rel, dJ / (1.0 + next.f2v[k].J.norm()));
      rec.max_dv = std::max(rec.max_dv, std::isnan(dv) ? std::numeric_limits<double>::infinity() : dv);
      if (opts.record_edges) {
        EdgeRecord er{iter, true, g.factor_ids[e.f2v[k].factor], g.var_ids[e.f2v[k].var], dJ, dv};
        if (opts.reference_J) {
          const auto& ref = (*opts.reference_J)[k];
          er.part_metric_to_ref = is_pd(next.f2v[k].J) ? part_metric(next.f2v[k].J, ref)
                                                       : std::numeric_limits<double>::infinity();
        }
        res.trajectory.edges.push_back(er);
      }
    }
    if (opts.record_edges) {
      for (std::size_t k = 0; k < e.v2f.size(); ++k) {
        const double dJ = (next.v2f[k].J - cur.v2f[k].J).norm();
        const double dv = (next.v2f[k].v - cur.v2f[k].v).cwiseAbs().maxCoeff();
        EdgeRecord er{iter, false, g.var_ids[e.v2f[k].var], g.factor_ids[e.v2f[k].factor], dJ, dv};
        if (opts.reference_J) {
          er.part_metric_to_ref = is_pd(next.v2f[k].J) ? part_metric(next.v2f[k].J, ref_v2f[k])
                                                       : std::numeric_limits<double>::infinity();
        }
        res.trajectory.edges.push_back(er);
      }
    }
    rec.part_metric_to_ref = ref_metric(next);
    res.trajectory.iterations.push_back(rec);
    if (opts.snapshot_beliefs) res.trajectory.belief_snapshots.push_back(compute_beliefs(gfg, next));

    cur = std::move(next);
    res.iterations = iter;

    const double vmax = std::max(max_abs(cur.f2v), max_abs(cur.v2f));
    if (!std::isfinite(vmax) || vmax > opts.divergence_threshold) {
      res.status = BpStatus::kDiverged;
      break;
    }
    if (rec.max_dJ_rel < opts.tol_J && rec.max_dv < opts.tol_v) {
      res.status = BpStatus::kConverged;
      res.settled_iteration = iter - 1;
      break;
    }
  }
  res.messages = std::move(cur);
  return res;
}

}  // namespace gabp
