#include "gabp/analysis.hpp"

#include "gabp/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace gabp {

namespace {

Matrix block_diag(const std::vector<Matrix>& blocks) {
  Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Matrix out = Matrix::Zero(n, n);
  Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Matrix BoundsLU::stacked_lower() const { return block_diag(lower); }
Matrix BoundsLU::stacked_upper() const { return block_diag(upper); }

BoundsLU compute_bounds(const GaussianFactorGraph& gfg) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  BoundsLU out;
  for (const auto& ref : e.f2v) {
    const int n = ref.factor;
    const int i = ref.var;
    const FactorSpec& f = gfg.factor_at(n);
    const Matrix& a = gfg.coeff(n, i);
    Matrix S = f.noise_cov;
    for (int j : g.factor_nbrs[n]) {
      if (j == i) continue;
      const Matrix& aj = gfg.coeff(n, j);
      S += aj * gfg.model().variables[j].prior_cov * aj.transpose();
    }
    Eigen::LLT<Matrix> r(f.noise_cov);
    Eigen::LLT<Matrix> s(sym(S));
    if (r.info() != Eigen::Success || s.info() != Eigen::Success) {
      throw NumericError("bounds: noise covariance not positive definite at factor " +
                         std::to_string(f.id));
    }
    out.upper.push_back(sym(a.transpose() * r.solve(a)));
    out.lower.push_back(sym(a.transpose() * s.solve(a)));
  }
  return out;
}

FixedPoint information_fixed_point(const GaussianFactorGraph& gfg, const FixedPointOptions& opts) {
  std::vector<Matrix> J;
  for (auto& m : init_messages(gfg, opts.init).f2v) J.push_back(std::move(m.J));
  FixedPoint fp;
  for (int it = 1; it <= opts.max_iters; ++it) {
    auto next = information_map(gfg, J);
    double step = 0;
    for (std::size_t k = 0; k < J.size(); ++k) {
      double s = (next[k] - J[k]).norm() / (1.0 + next[k].norm());
      if (s > 0 && is_pd(J[k]) && is_pd(next[k])) s = std::min(s, part_metric(next[k], J[k]));
      step = std::max(step, s);
    }
    J = std::move(next);
    fp.iterations = it;
    if (step < opts.tol) {
      fp.converged = true;
      break;
    }
  }
  const auto image = information_map(gfg, J);
  for (std::size_t k = 0; k < J.size(); ++k) {
    fp.residual = std::max(fp.residual, (image[k] - J[k]).norm());
  }
  fp.J_star = std::move(J);
  return fp;
}

std::vector<double> information_trajectory(const GaussianFactorGraph& gfg, const InitStrategy& init,
                                           const std::vector<Matrix>& reference, int iterations) {
  std::vector<Matrix> J;
  for (auto& m : init_messages(gfg, init).f2v) J.push_back(std::move(m.J));
  std::vector<double> d{stacked_part_metric(J, reference)};
  for (int it = 1; it <= iterations; ++it) {
    J = information_map(gfg, J);
    d.push_back(stacked_part_metric(J, reference));
  }
  return d;
}

QSystem assemble_Q(const GaussianFactorGraph& gfg, const FixedPoint& fp) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  QSystem q;
  q.J_v2f_star = v2f_information(gfg, fp.J_star);
  std::vector<Matrix> cov;
  for (const auto& J : q.J_v2f_star) cov.push_back(spd_inverse(J, "fixed-point v2f information"));

  // M_{k,j} factorizations, keyed by f2v edge index.
  std::vector<Eigen::LLT<Matrix>> M(e.f2v.size());
  for (std::size_t idx = 0; idx < e.f2v.size(); ++idx) {
    const int k = e.f2v[idx].factor;
    const int j = e.f2v[idx].var;
    Matrix m = gfg.factor_at(k).noise_cov;
    for (int z : g.factor_nbrs[k]) {
      if (z == j) continue;
      const Matrix& a = gfg.coeff(k, z);
      m += a * cov[e.v2f_index(g, z, k)] * a.transpose();
    }
    m = sym(m);
    M[idx].compute(m);
    if (M[idx].info() != Eigen::Success) throw NumericError("assemble_Q: M block not positive definite");
    q.M_blocks[{g.factor_ids[k], g.var_ids[j]}] = std::move(m);
  }

  const Index dim = e.v2f_dim();
  q.Q = Matrix::Zero(dim, dim);
  q.b = Vector::Zero(dim);
  q.block_pattern.resize(e.v2f.size());
  for (std::size_t row = 0; row < e.v2f.size(); ++row) {
    const int j = e.v2f[row].var;
    const int n = e.v2f[row].factor;
    const Index r0 = e.v2f_offset[row];
    const Index dj = gfg.var_dim(j);
    for (int k : g.var_nbrs[j]) {
      if (k == n) continue;
      const auto& llt = M[e.f2v_index(g, k, j)];
      const Matrix lead = cov[row] * gfg.coeff(k, j).transpose();
      q.b.segment(r0, dj) += lead * llt.solve(gfg.factor_at(k).obs);
      for (int z : g.factor_nbrs[k]) {
        if (z == j) continue;
        const int col = e.v2f_index(g, z, k);
        q.block_pattern[row].push_back(col);
        q.Q.block(r0, e.v2f_offset[col], dj, gfg.var_dim(z)) += lead * llt.solve(gfg.coeff(k, z));
      }
    }
  }
  return q;
}

bool structurally_nilpotent(const QSystem& q) {
  // Kahn's algorithm: acyclic iff every node can be peeled off.
  const std::size_t n = q.block_pattern.size();
  std::vector<int> indeg(n, 0);
  for (const auto& succ : q.block_pattern)
    for (int c : succ) ++indeg[c];
  std::vector<int> ready;
  for (std::size_t u = 0; u < n; ++u)
    if (indeg[u] == 0) ready.push_back(static_cast<int>(u));
  std::size_t removed = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++removed;
    for (int c : q.block_pattern[u])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  return removed == n;
}

double q_spectral_radius(const QSystem& q) {
  if (q.Q.size() == 0 || structurally_nilpotent(q)) return 0.0;
  return spectral_radius(q.Q);
}

MeanRecursionResult two_phase_mean_recursion(const QSystem& q, const Vector& v0, double tol,
                                             int max_iters, double divergence_threshold) {
  MeanRecursionResult res;
  res.v = v0.size() ? v0 : Vector::Zero(q.b.size());
  if (res.v.size() != q.b.size()) throw Error("initial mean vector has wrong length");
  for (int it = 1; it <= max_iters; ++it) {
    Vector next = q.b - q.Q * res.v;
    const double step = next.size() ? (next - res.v).cwiseAbs().maxCoeff() : 0.0;
    res.v = std::move(next);
    res.iterations = it;
    const double vmax = res.v.size() ? res.v.cwiseAbs().maxCoeff() : 0.0;
    if (!res.v.allFinite() || vmax > divergence_threshold) {
      res.status = BpStatus::kDiverged;
      return res;
    }
    if (step < tol) {
      res.status = BpStatus::kConverged;
      return res;
    }
  }
  res.status = BpStatus::kMaxIters;
  return res;
}

MessageSet messages_from_v2f(const GaussianFactorGraph& gfg, const FixedPoint& fp, const QSystem& q,
                             const Vector& v2f_means) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  if (v2f_means.size() != e.v2f_dim()) throw Error("v2f mean vector has wrong length");
  MessageSet m;
  for (std::size_t k = 0; k < e.v2f.size(); ++k) {
    m.v2f.push_back({q.J_v2f_star[k], v2f_means.segment(e.v2f_offset[k], gfg.var_dim(e.v2f[k].var))});
  }
  for (std::size_t idx = 0; idx < e.f2v.size(); ++idx) {
    const int k = e.f2v[idx].factor;
    const int j = e.f2v[idx].var;
    Vector r = gfg.factor_at(k).obs;
    for (int z : g.factor_nbrs[k]) {
      if (z == j) continue;
      r -= gfg.coeff(k, z) * m.v2f[e.v2f_index(g, z, k)].v;
    }
    const Matrix& Mkj = q.M_blocks.at({g.factor_ids[k], g.var_ids[j]});
    const Vector h = gfg.coeff(k, j).transpose() * Mkj.llt().solve(r);
    m.f2v.push_back({fp.J_star[idx], fp.J_star[idx].llt().solve(h)});
  }
  return m;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kGuaranteedByTopology: return "guaranteed_by_topology";
    case Verdict::kConvergesRhoLt1: return "converges_rho_lt_1";
    case Verdict::kDivergesRhoGe1: return "diverges_rho_ge_1";
    case Verdict::kBorderline: return "borderline";
  }
  return "?";
}

Verdict decide_mean_convergence(double rho_Q, const TopologyClass& topo) {
  if (topo.kind == TopologyKind::kForest || topo.kind == TopologyKind::kSingleLoopPlusForest) {
    return Verdict::kGuaranteedByTopology;
  }
  if (std::abs(rho_Q - 1.0) < kBorderlineBand) return Verdict::kBorderline;
  return rho_Q < 1.0 ? Verdict::kConvergesRhoLt1 : Verdict::kDivergesRhoGe1;
}

std::optional<RateFit> fit_contraction_rate(const std::vector<double>& d, double floor) {
  // Fit window: from the first finite value up to the last value above the
  // floor, shrunk to its longest non-increasing tail.
  int cut = 0;
  while (cut < static_cast<int>(d.size()) && !(d[cut] <= floor)) ++cut;
  int first = cut - 1;
  if (first < 0 || !std::isfinite(d[first])) return std::nullopt;
  while (first > 0 && std::isfinite(d[first - 1]) && d[first - 1] >= d[first]) --first;
  const int last = cut - 1;
  const int points = last - first + 1;
  if (points < 3) return std::nullopt;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int l = first; l <= last; ++l) {
    const double y = std::log(d[l]);
    sx += l;
    sy += y;
    sxx += double(l) * l;
    sxy += l * y;
  }
  const double slope = (points * sxy - sx * sy) / (points * sxx - sx * sx);
  RateFit fit;
  fit.c = std::exp(slope);
  fit.first = first;
  fit.last = last;
  fit.points = points;
  fit.non_contracting = !(fit.c < 1.0);
  if (first == 0 && std::isfinite(d[0]) && d[0] > 0) {
    double env = 0;
    for (int l = 1; l <= last; ++l) env = std::max(env, std::pow(d[l] / d[0], 1.0 / l));
    fit.envelope_c = env;
  }
  return fit;
}

bool geometric_envelope_holds(const std::vector<double>& d, double c, double floor) {
  if (d.empty() || !std::isfinite(d[0])) return true;
  for (std::size_t l = 2; l < d.size(); ++l) {
    if (!(d[l] > floor)) continue;
    if (d[l] > std::pow(c, double(l)) * d[0] * (1 + 1e-12)) return false;
  }
  return true;
}

ConvergenceReport certify(const GaussianFactorGraph& gfg, const CertifyOptions& opts) {
  ConvergenceReport rep;
  rep.topology = classify_topology(gfg.graph());
  rep.bounds = compute_bounds(gfg);
  rep.fixed_point = information_fixed_point(gfg, opts.fixed_point);
  rep.fixed_point_tol = opts.fixed_point.tol;
  if (!rep.fixed_point.converged) rep.notes.push_back("information fixed point did not reach tolerance");

  const QSystem q = assemble_Q(gfg, rep.fixed_point);
  rep.rho_Q = q_spectral_radius(q);
  rep.verdict = decide_mean_convergence(rep.rho_Q, rep.topology);
  if (rep.verdict == Verdict::kBorderline) {
    rep.notes.push_back("rho(Q) within the borderline band; verdict inconclusive");
  }
  if (rep.verdict == Verdict::kDivergesRhoGe1 && rep.fixed_point.converged) {
    rep.notes.push_back(
        "means diverge but the information matrices still converge to a unique pd fixed point");
  }

  rep.part_metric_trajectory =
      information_trajectory(gfg, opts.init, rep.fixed_point.J_star, rep.fixed_point.iterations);
  rep.rate = fit_contraction_rate(rep.part_metric_trajectory);
  if (rep.rate && rep.rate->non_contracting) rep.notes.push_back("fitted rate c >= 1");

  if (opts.run_bp_check) {
    RunOptions ro = opts.bp;
    ro.init = opts.init;
    try {
      const BpResult r = run_bp(gfg, ro);
      rep.bp_status = r.status;
      rep.bp_iterations = r.iterations;
      if (r.status == BpStatus::kConverged) {
        const auto sol = centralized_solve(gfg.model());
        const auto beliefs = compute_beliefs(gfg, r.messages);
        double err = 0;
        for (const auto& b : beliefs) {
          err = std::max(err, (b.mean - sol.mean_of(b.var_id)).cwiseAbs().maxCoeff());
        }
        rep.bp_max_mean_error = err;
      }
    } catch (const MessageUndefined& ex) {
      rep.bp_status = BpStatus::kDiverged;
      rep.notes.push_back(std::string("bp cross-check: ") + ex.what());
    }
  }
  return rep;
}

}  // namespace gabp
