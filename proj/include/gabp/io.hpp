#pragma once

// File formats. Models, MRFs and reports are JSON; traces are CSV.
// Matrices are objects {"rows", "cols", "data"} with data in row-major order.

#include "gabp/analysis.hpp"
#include "gabp/mrf_bridge.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace gabp::io {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

Json model_to_json(const LinearGaussianModel& model);
/// Throws FormatError on missing keys, wrong types or inconsistent dimensions.
LinearGaussianModel model_from_json(const Json& j);

/// J is given as nested rows or as a matrix object; h as a plain array.
MrfModel mrf_from_json(const Json& j);
Json mrf_to_json(const MrfModel& mrf);

/// {"messages": [{"factor", "variable", "J"}, ...]} covering every f2v edge.
std::vector<Matrix> custom_init_from_json(const Json& j, const GaussianFactorGraph& gfg);

Json validation_to_json(const ValidationReport& report);
Json solution_to_json(const CentralizedSolution& sol);
Json report_to_json(const ConvergenceReport& rep, const GaussianFactorGraph& gfg);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
std::string dump(const Json& j);

inline constexpr const char* kTrajectoryHeader =
    "iter,edge_kind,from,to,dJ_fro,dv_inf,part_metric_to_ref";
inline constexpr const char* kBeliefHeader = "agent,component,mean,variance";

void write_trajectory_csv(std::ostream& os, const BpTrajectory& traj);
void write_beliefs_csv(std::ostream& os, const std::vector<Belief>& beliefs);

/// %.17g, with nan / inf spelled that way.
std::string format_double(double x);

}  // namespace gabp::io
