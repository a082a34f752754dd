#include "gabp/mrf_bridge.hpp"

#include "gabp/numerics.hpp"

#include <cmath>
#include <deque>

namespace gabp {

namespace {

constexpr double kSurplusDrop = 1e-14;
constexpr double kPerronTol = 1e-12;
constexpr int kPerronMaxSteps = 10000;

void require_square_mrf(const Matrix& J, const Vector& h) {
  if (J.rows() != J.cols()) throw FormatError("MRF information matrix must be square");
  if (h.size() != J.rows()) throw FormatError("MRF potential vector length does not match J");
  if (!J.allFinite() || !h.allFinite()) throw FormatError("MRF contains non-finite entries");
  if (asymmetry(J) > kSymmetryTolerance * std::max(1.0, J.cwiseAbs().maxCoeff())) {
    throw Error("MRF information matrix is not symmetric");
  }
}

/// Connected components of the nonzero pattern of a symmetric matrix.
std::vector<std::vector<int>> components(const Matrix& N) {
  const int n = static_cast<int>(N.rows());
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    out.emplace_back();
    std::deque<int> q{s};
    comp[s] = static_cast<int>(out.size()) - 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      out.back().push_back(u);
      for (int w = 0; w < n; ++w) {
        if (w != u && N(u, w) != 0 && comp[w] < 0) {
          comp[w] = comp[s];
          q.push_back(w);
        }
      }
    }
  }
  return out;
}

/// Positive Perron vector of an irreducible nonnegative matrix, by power
/// iteration on N + I (primitive, same eigenvector).
Vector perron_vector(const Matrix& N) {
  Vector u = Vector::Ones(N.rows()) / std::sqrt(double(N.rows()));
  for (int step = 0; step < kPerronMaxSteps; ++step) {
    Vector next = N * u + u;
    next /= next.norm();
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = std::move(next);
    if (change < kPerronTol) return u;
  }
  throw NumericError("Perron scaling did not converge in " + std::to_string(kPerronMaxSteps) +
                     " steps (component size " + std::to_string(N.rows()) + ")");
}

}  // namespace

NormalizedMrf normalize_mrf(const Matrix& J_raw, const Vector& h_raw) {
  require_square_mrf(J_raw, h_raw);
  const Vector diag = J_raw.diagonal();
  if ((diag.array() <= 0).any()) throw Error("MRF diagonal must be strictly positive");
  NormalizedMrf out;
  out.scale = diag.array().rsqrt();
  out.mrf.J = out.scale.asDiagonal() * J_raw * out.scale.asDiagonal();
  out.mrf.J = symmetrize(out.mrf.J);
  out.mrf.J.diagonal().setOnes();
  out.mrf.h = out.scale.cwiseProduct(h_raw);
  return out;
}

WalkSummabilityReport check_walk_summability(const MrfModel& mrf) {
  require_square_mrf(mrf.J, mrf.h);
  WalkSummabilityReport rep;
  if (mrf.J.size() == 0) {
    rep.lambda_min = std::numeric_limits<double>::infinity();
    rep.walk_summable = true;
    return rep;
  }
  const Matrix abs_r = mrf.R().cwiseAbs();
  const Matrix m = Matrix::Identity(mrf.J.rows(), mrf.J.cols()) - abs_r;
  rep.lambda_min = min_eig(m);
  rep.walk_summable = is_pd(m);
  return rep;
}

int max_column_nonzeros(const Matrix& V) {
  int best = 0;
  for (Index c = 0; c < V.cols(); ++c) {
    best = std::max(best, static_cast<int>((V.col(c).array() != 0).count()));
  }
  return best;
}

FactorWidth2Factorization factor_width_two(const MrfModel& mrf, std::optional<double> omega) {
  const auto ws = check_walk_summability(mrf);
  if (!ws.walk_summable) throw Error("factorization requires walk-summable model");
  const Index n = mrf.J.rows();
  FactorWidth2Factorization out;
  out.omega = omega.value_or(0.5 * std::min(1.0, ws.lambda_min));
  if (!(out.omega > 0) || !(out.omega < ws.lambda_min)) {
    throw Error("omega must lie in (0, " + std::to_string(ws.lambda_min) + ")");
  }

  const Matrix M = mrf.J - out.omega * Matrix::Identity(n, n);
  Matrix N = M.cwiseAbs();
  N.diagonal().setZero();

  Vector d = Vector::Ones(n);
  for (const auto& comp : components(N)) {
    if (comp.size() < 2) continue;
    const Index k = static_cast<Index>(comp.size());
    Matrix sub(k, k);
    for (Index a = 0; a < k; ++a)
      for (Index b = 0; b < k; ++b) sub(a, b) = N(comp[a], comp[b]);
    const Vector u = perron_vector(sub);
    for (Index a = 0; a < k; ++a) d(comp[a]) = u(a);
  }

  const Matrix S = d.asDiagonal() * M * d.asDiagonal();
  std::vector<Vector> cols;
  for (Index i = 0; i < n; ++i) {
    double surplus = S(i, i);
    for (Index j = 0; j < n; ++j) {
      if (j != i) surplus -= std::abs(S(i, j));
    }
    if (surplus < -1e-10 * std::max(1.0, S(i, i))) {
      throw NumericError("scaled matrix is not diagonally dominant at row " + std::to_string(i));
    }
    if (surplus > kSurplusDrop) {
      Vector c = Vector::Zero(n);
      c(i) = std::sqrt(surplus);
      cols.push_back(std::move(c));
    }
    for (Index j = i + 1; j < n; ++j) {
      const double s = S(i, j);
      if (s == 0) continue;
      Vector c = Vector::Zero(n);
      const double r = std::sqrt(std::abs(s));
      c(i) = r;
      c(j) = s > 0 ? r : -r;
      cols.push_back(std::move(c));
    }
  }

  out.V.resize(n, static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.V.col(static_cast<Index>(c)) = cols[c].cwiseQuotient(d);
  }
  return out;
}

LinearGaussianModel mrf_to_linear_gaussian(const MrfModel& mrf,
                                           const FactorWidth2Factorization& fac) {
  require_square_mrf(mrf.J, mrf.h);
  const Index n = mrf.J.rows();
  if (fac.V.rows() != n) throw Error("factorization does not match the MRF dimension");
  if (!(fac.omega > 0)) throw Error("factorization omega must be positive");

  Vector tau = Vector::Constant(n, fac.omega);
  LinearGaussianModel out;
  std::vector<FactorSpec> pairs;
  const int first_pair_id = static_cast<int>(n) + 1;
  for (Index c = 0; c < fac.V.cols(); ++c) {
    std::vector<int> nz;
    for (Index r = 0; r < n; ++r) {
      if (fac.V(r, c) != 0) nz.push_back(static_cast<int>(r));
    }
    if (nz.size() > 2) {
      throw Error("factorization column " + std::to_string(c) + " has more than two nonzeros");
    }
    if (nz.size() == 1) {
      tau(nz[0]) += fac.V(nz[0], c) * fac.V(nz[0], c);
    } else if (nz.size() == 2) {
      FactorSpec f;
      f.id = first_pair_id + static_cast<int>(pairs.size());
      for (int r : nz) {
        f.scope.push_back(r + 1);
        f.coeff[r + 1] = Matrix::Constant(1, 1, fac.V(r, c));
      }
      f.noise_cov = Matrix::Identity(1, 1);
      f.obs = Vector::Zero(1);
      pairs.push_back(std::move(f));
    }
  }

  // Node n has precision tau_n and linear term h_n. Split evenly between a
  // zero-mean prior and a unary observation, which carries the mean.
  for (Index i = 0; i < n; ++i) {
    const int id = static_cast<int>(i) + 1;
    const double half_var = 2.0 / tau(i);
    out.variables.push_back({id, 1, Matrix::Constant(1, 1, half_var)});
    FactorSpec f;
    f.id = id;
    f.scope = {id};
    f.coeff[id] = Matrix::Identity(1, 1);
    f.noise_cov = Matrix::Constant(1, 1, half_var);
    f.obs = Vector::Constant(1, half_var * mrf.h(i));
    out.factors.push_back(std::move(f));
  }
  for (auto& f : pairs) out.factors.push_back(std::move(f));
  return out;
}

Vector mrf_marginal_oracle(const MrfModel& mrf) {
  require_square_mrf(mrf.J, mrf.h);
  Eigen::LLT<Matrix> llt(mrf.J);
  if (llt.info() != Eigen::Success || !is_pd(mrf.J)) {
    throw NumericError("MRF information matrix is not positive definite");
  }
  return llt.solve(mrf.h);
}

}  // namespace gabp
