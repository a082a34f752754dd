#include "gabp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gabp::io {

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(where + ": missing key '" + key + "'");
  return *it;
}

int as_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw FormatError(what + ": expected an integer");
  return j.get<int>();
}

double as_double(const Json& j, const std::string& what) {
  if (!j.is_number()) throw FormatError(what + ": expected a number");
  return j.get<double>();
}

const char* issue_name(IssueKind k) {
  switch (k) {
    case IssueKind::kEmptyModel: return "empty_model";
    case IssueKind::kDuplicateId: return "duplicate_id";
    case IssueKind::kBadDimension: return "bad_dimension";
    case IssueKind::kPriorNotPd: return "prior_not_pd";
    case IssueKind::kNoiseNotPd: return "noise_not_pd";
    case IssueKind::kRankDeficient: return "rank_deficient";
    case IssueKind::kUnknownVariable: return "unknown_variable";
    case IssueKind::kScopeMismatch: return "scope_mismatch";
    case IssueKind::kNonFinite: return "non_finite";
    case IssueKind::kNotNetworkForm: return "not_network_form";
  }
  return "?";
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (j.is_array()) {
    // Nested rows.
    const Index rows = static_cast<Index>(j.size());
    Index cols = -1;
    Matrix m;
    for (Index r = 0; r < rows; ++r) {
      const Json& row = j[r];
      if (!row.is_array()) throw FormatError(what + ": expected nested rows");
      if (cols < 0) {
        cols = static_cast<Index>(row.size());
        m.resize(rows, cols);
      } else if (static_cast<Index>(row.size()) != cols) {
        throw FormatError(what + ": ragged rows");
      }
      for (Index c = 0; c < cols; ++c) m(r, c) = as_double(row[c], what);
    }
    return rows == 0 ? Matrix(0, 0) : m;
  }
  const int rows = as_int(field(j, "rows", what), what + ".rows");
  const int cols = as_int(field(j, "cols", what), what + ".cols");
  const Json& data = field(j, "data", what);
  if (rows < 0 || cols < 0) throw FormatError(what + ": negative dimension");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(rows) * cols) {
    throw FormatError(what + ": data length does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = as_double(data[r * cols + c], what);
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = as_double(j[i], what);
  return v;
}

Json model_to_json(const LinearGaussianModel& model) {
  Json vars = Json::array();
  for (const auto& v : model.variables) {
    vars.push_back({{"id", v.id}, {"dim", v.dim}, {"prior_cov", matrix_to_json(v.prior_cov)}});
  }
  Json facs = Json::array();
  for (const auto& f : model.factors) {
    Json coeff = Json::object();
    for (int id : f.scope) coeff[std::to_string(id)] = matrix_to_json(f.coeff.at(id));
    facs.push_back({{"id", f.id},
                    {"scope", f.scope},
                    {"coeff", std::move(coeff)},
                    {"noise_cov", matrix_to_json(f.noise_cov)},
                    {"obs", vector_to_json(f.obs)}});
  }
  return Json{{"variables", std::move(vars)}, {"factors", std::move(facs)}};
}

LinearGaussianModel model_from_json(const Json& j) {
  LinearGaussianModel m;
  const Json& vars = field(j, "variables", "model");
  const Json& facs = field(j, "factors", "model");
  if (!vars.is_array() || !facs.is_array()) throw FormatError("model: variables/factors must be arrays");
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const std::string where = "variables[" + std::to_string(k) + "]";
    VariableSpec v;
    v.id = as_int(field(vars[k], "id", where), where + ".id");
    v.dim = as_int(field(vars[k], "dim", where), where + ".dim");
    v.prior_cov = matrix_from_json(field(vars[k], "prior_cov", where), where + ".prior_cov");
    m.variables.push_back(std::move(v));
  }
  for (std::size_t k = 0; k < facs.size(); ++k) {
    const std::string where = "factors[" + std::to_string(k) + "]";
    const Json& fj = facs[k];
    FactorSpec f;
    f.id = as_int(field(fj, "id", where), where + ".id");
    const Json& scope = field(fj, "scope", where);
    if (!scope.is_array()) throw FormatError(where + ".scope: expected an array");
    for (const auto& s : scope) f.scope.push_back(as_int(s, where + ".scope"));
    const Json& coeff = field(fj, "coeff", where);
    if (!coeff.is_object()) throw FormatError(where + ".coeff: expected an object");
    for (auto it = coeff.begin(); it != coeff.end(); ++it) {
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError(where + ".coeff: key '" + it.key() + "' is not a variable id");
      }
      f.coeff[id] = matrix_from_json(it.value(), where + ".coeff[" + it.key() + "]");
    }
    f.noise_cov = matrix_from_json(field(fj, "noise_cov", where), where + ".noise_cov");
    f.obs = vector_from_json(field(fj, "obs", where), where + ".obs");
    m.factors.push_back(std::move(f));
  }
  return m;
}

MrfModel mrf_from_json(const Json& j) {
  MrfModel m;
  m.J = matrix_from_json(field(j, "J", "mrf"), "mrf.J");
  m.h = vector_from_json(field(j, "h", "mrf"), "mrf.h");
  if (m.J.rows() != m.J.cols() || m.h.size() != m.J.rows()) {
    throw FormatError("mrf: J must be square with the length of h");
  }
  return m;
}

Json mrf_to_json(const MrfModel& mrf) {
  Json rows = Json::array();
  for (Index r = 0; r < mrf.J.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < mrf.J.cols(); ++c) row.push_back(mrf.J(r, c));
    rows.push_back(std::move(row));
  }
  return Json{{"J", std::move(rows)}, {"h", vector_to_json(mrf.h)}};
}

std::vector<Matrix> custom_init_from_json(const Json& j, const GaussianFactorGraph& gfg) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  const Json& msgs = field(j, "messages", "custom init");
  if (!msgs.is_array()) throw FormatError("custom init: messages must be an array");
  std::vector<Matrix> out(e.f2v.size());
  std::vector<bool> seen(e.f2v.size(), false);
  for (std::size_t k = 0; k < msgs.size(); ++k) {
    const std::string where = "messages[" + std::to_string(k) + "]";
    const int fid = as_int(field(msgs[k], "factor", where), where + ".factor");
    const int vid = as_int(field(msgs[k], "variable", where), where + ".variable");
    int idx = 0;
    try {
      idx = e.f2v_index(g, g.factor_pos(fid), g.var_pos(vid));
    } catch (const Error&) {
      throw FormatError(where + ": no edge from factor " + std::to_string(fid) + " to variable " +
                        std::to_string(vid));
    }
    out[idx] = matrix_from_json(field(msgs[k], "J", where), where + ".J");
    seen[idx] = true;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw FormatError("custom init: missing edge (" + std::to_string(g.factor_ids[e.f2v[k].factor]) +
                        "," + std::to_string(g.var_ids[e.f2v[k].var]) + ")");
    }
  }
  return out;
}

Json validation_to_json(const ValidationReport& report) {
  Json issues = Json::array();
  for (const auto& i : report.issues) {
    Json item{{"kind", issue_name(i.kind)}, {"message", i.message}};
    if (i.factor) item["factor"] = *i.factor;
    if (i.variable) item["variable"] = *i.variable;
    issues.push_back(std::move(item));
  }
  return Json{{"valid", report.ok()}, {"issues", std::move(issues)}, {"warnings", report.warnings}};
}

Json solution_to_json(const CentralizedSolution& sol) {
  Json agents = Json::array();
  for (int id : sol.var_ids) {
    agents.push_back({{"id", id},
                      {"mean", vector_to_json(sol.mean_of(id))},
                      {"cov", matrix_to_json(sol.cov_of(id))}});
  }
  return Json{{"agents", std::move(agents)}};
}

Json report_to_json(const ConvergenceReport& rep, const GaussianFactorGraph& gfg) {
  const auto& g = gfg.graph();
  const auto& e = gfg.edges();
  Json edges = Json::array();
  for (std::size_t k = 0; k < e.f2v.size(); ++k) {
    edges.push_back({{"factor", g.factor_ids[e.f2v[k].factor]},
                     {"variable", g.var_ids[e.f2v[k].var]},
                     {"L", matrix_to_json(rep.bounds.lower[k])},
                     {"U", matrix_to_json(rep.bounds.upper[k])},
                     {"J_star", matrix_to_json(rep.fixed_point.J_star[k])}});
  }
  Json loop = Json::array();
  for (const auto& [f, v] : rep.topology.loop_members) loop.push_back({f, v});
  Json topo{{"kind", to_string(rep.topology.kind)},
            {"cycle_rank", rep.topology.cycle_rank},
            {"components", rep.topology.components},
            {"loop", std::move(loop)}};
  Json traj = Json::array();
  for (double d : rep.part_metric_trajectory) traj.push_back(number_or_null(d));
  Json out{{"topology", std::move(topo)},
           {"fixed_point",
            {{"converged", rep.fixed_point.converged},
             {"iterations", rep.fixed_point.iterations},
             {"residual", rep.fixed_point.residual},
             {"tolerance", rep.fixed_point_tol}}},
           {"rho_Q", rep.rho_Q},
           {"verdict", to_string(rep.verdict)},
           {"rate", nullptr},
           {"part_metric_trajectory", std::move(traj)},
           {"edges", std::move(edges)}};
  if (rep.rate) {
    out["rate"] = {{"c", rep.rate->c},
                   {"envelope_c", number_or_null(rep.rate->envelope_c)},
                   {"first", rep.rate->first},
                   {"last", rep.rate->last},
                   {"points", rep.rate->points},
                   {"non_contracting", rep.rate->non_contracting}};
  }
  if (rep.bp_status) {
    Json bp{{"status", to_string(*rep.bp_status)}, {"iterations", *rep.bp_iterations}};
    if (rep.bp_max_mean_error) bp["max_mean_error"] = *rep.bp_max_mean_error;
    out["bp_check"] = std::move(bp);
  }
  out["notes"] = rep.notes;
  return out;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << dump(j);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const BpTrajectory& traj) {
  os << kTrajectoryHeader << '\n';
  for (const auto& r : traj.edges) {
    os << r.iteration << ',' << (r.f2v ? "f2v" : "v2f") << ',' << r.from_id << ',' << r.to_id << ','
       << format_double(r.dJ_fro) << ',' << format_double(r.dv_inf) << ','
       << format_double(r.part_metric_to_ref) << '\n';
  }
}

void write_beliefs_csv(std::ostream& os, const std::vector<Belief>& beliefs) {
  os << kBeliefHeader << '\n';
  for (const auto& b : beliefs) {
    for (Index c = 0; c < b.mean.size(); ++c) {
      os << b.var_id << ',' << c << ',' << format_double(b.mean(c)) << ','
         << format_double(b.cov(c, c)) << '\n';
    }
  }
}

}  // namespace gabp::io
