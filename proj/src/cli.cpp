#include "gabp/cli.hpp"

#include "gabp/io.hpp"
#include "gabp/numerics.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace gabp::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::stderr_color_mt("gabp");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("GABP_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return log;
}

struct RunConfig {
  std::string model_path;
  std::string init = "zero";
  std::string schedule = "sync";
  double tol_J = 1e-10;
  double tol_v = 1e-10;
  int max_iters = 10000;
  std::uint64_t seed = 0;
  bool strict = false;
  std::string out_dir;
};

class InputFailure : public Error {
 public:
  using Error::Error;
};

LinearGaussianModel load_model(const std::string& path) {
  return io::model_from_json(io::read_json(path));
}

void emit(std::ostream& out, const std::string& out_dir, const char* name, const Json& j) {
  out << io::dump(j);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    io::write_json(fs::path(out_dir) / name, j);
  }
}

InitStrategy parse_init(const std::string& spec, const GaussianFactorGraph& gfg) {
  if (spec == "zero") return InitStrategy::zero();
  if (spec == "lower") return InitStrategy::lower();
  if (spec == "upper") return InitStrategy::upper();
  if (spec.rfind("custom:", 0) == 0) {
    return InitStrategy::custom(io::custom_init_from_json(io::read_json(spec.substr(7)), gfg));
  }
  throw InputFailure("unknown init '" + spec + "' (expected zero, lower, upper or custom:<path>)");
}

ScheduleKind parse_schedule(const std::string& s) {
  if (s == "sync") return ScheduleKind::kSynchronous;
  if (s == "seq") return ScheduleKind::kSequentialAscending;
  if (s == "random") return ScheduleKind::kRandomPermutation;
  throw InputFailure("unknown schedule '" + s + "'");
}

int cmd_validate(const std::string& path, const std::string& out_dir, std::ostream& out) {
  const auto model = load_model(path);
  const auto report = validate_model(model);
  Json j = io::validation_to_json(report);
  j["network_form"] = network_form_issues(model).ok();
  emit(out, out_dir, "validation.json", j);
  return report.ok() ? kOk : kDomainFailure;
}

int cmd_solve(const std::string& path, const std::string& out_dir, std::ostream& out) {
  const auto model = load_model(path);
  require_valid(model);
  emit(out, out_dir, "solution.json", io::solution_to_json(centralized_solve(model)));
  return kOk;
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.tol_J > 0) || !(cfg.tol_v > 0)) throw InputFailure("tolerances must be positive");
  if (cfg.max_iters < 1) throw InputFailure("max-iters must be >= 1");
  const GaussianFactorGraph gfg(load_model(cfg.model_path));

  RunOptions opts;
  opts.init = parse_init(cfg.init, gfg);
  opts.schedule = {parse_schedule(cfg.schedule), cfg.seed};
  opts.tol_J = cfg.tol_J;
  opts.tol_v = cfg.tol_v;
  opts.max_iters = cfg.max_iters;
  opts.strict = cfg.strict;
  opts.record_edges = !cfg.out_dir.empty();
  if (opts.record_edges) {
    try {
      const auto fp = information_fixed_point(gfg);
      if (fp.converged) opts.reference_J = fp.J_star;
    } catch (const Error& ex) {
      logger()->info("no fixed-point reference: {}", ex.what());
    }
  }

  Json summary{{"init", to_string(opts.init.kind)}, {"schedule", cfg.schedule}};
  BpResult res;
  try {
    res = run_bp(gfg, opts);
  } catch (const MessageUndefined& ex) {
    summary["status"] = "message_undefined";
    summary["error"] = ex.what();
    summary["edge"] = {{"factor", ex.factor_id()}, {"variable", ex.var_id()}};
    summary["strict"] = ex.from_strict_check();
    emit(out, cfg.out_dir, "run.json", summary);
    return kExistenceViolation;
  }
  logger()->info("bp finished: {} after {} iterations", to_string(res.status), res.iterations);

  summary["status"] = to_string(res.status);
  summary["iterations"] = res.iterations;
  summary["settled_iteration"] = res.settled_iteration;
  std::vector<Belief> beliefs;
  if (res.status != BpStatus::kDiverged) {
    try {
      beliefs = compute_beliefs(gfg, res.messages);
    } catch (const NumericError& ex) {
      logger()->warn("beliefs unavailable: {}", ex.what());
    }
  }
  summary["max_mean_error"] = nullptr;
  if (!beliefs.empty()) {
    try {
      const auto sol = centralized_solve(gfg.model());
      double err = 0;
      for (const auto& b : beliefs) err = std::max(err, (b.mean - sol.mean_of(b.var_id)).cwiseAbs().maxCoeff());
      summary["max_mean_error"] = err;
    } catch (const Unobservable&) {
      summary["observable"] = false;
    }
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    std::ofstream traj(fs::path(cfg.out_dir) / "trajectory.csv", std::ios::binary);
    io::write_trajectory_csv(traj, res.trajectory);
    std::ofstream bel(fs::path(cfg.out_dir) / "beliefs.csv", std::ios::binary);
    io::write_beliefs_csv(bel, beliefs);
  }
  emit(out, cfg.out_dir, "run.json", summary);
  switch (res.status) {
    case BpStatus::kConverged: return kOk;
    case BpStatus::kMaxIters: return kIterationBudget;
    case BpStatus::kDiverged: return kDiverged;
  }
  return kDomainFailure;
}

int cmd_analyze(const RunConfig& cfg, bool certify_bp, std::ostream& out) {
  const GaussianFactorGraph gfg(load_model(cfg.model_path));
  CertifyOptions opts;
  opts.init = parse_init(cfg.init, gfg);
  opts.run_bp_check = certify_bp;
  opts.bp.tol_J = cfg.tol_J;
  opts.bp.tol_v = cfg.tol_v;
  opts.bp.max_iters = cfg.max_iters;
  opts.bp.schedule = {parse_schedule(cfg.schedule), cfg.seed};
  opts.bp.strict = cfg.strict;
  const auto rep = certify(gfg, opts);
  emit(out, cfg.out_dir, "report.json", io::report_to_json(rep, gfg));
  return kOk;
}

int cmd_convert(const std::string& path, std::optional<double> omega, const std::string& out_dir,
                std::ostream& out) {
  const MrfModel raw = io::mrf_from_json(io::read_json(path));
  const NormalizedMrf norm = normalize_mrf(raw.J, raw.h);
  const auto ws = check_walk_summability(norm.mrf);
  if (!ws.walk_summable) {
    Json j{{"walk_summable", false}, {"lambda_min", ws.lambda_min}};
    emit(out, out_dir, "walk_summability.json", j);
    return kDomainFailure;
  }
  const auto fac = factor_width_two(norm.mrf, omega);
  Json j = io::model_to_json(mrf_to_linear_gaussian(norm.mrf, fac));
  j["provenance"] = {{"omega", fac.omega},
                     {"columns", fac.columns()},
                     {"lambda_min", ws.lambda_min},
                     {"scale", io::vector_to_json(norm.scale)}};
  emit(out, out_dir, "model.json", j);
  return kOk;
}

int cmd_gen(const RandomModelOptions& opts, const std::string& out_dir, std::ostream& out) {
  emit(out, out_dir, "model.json", io::model_to_json(random_model(opts)));
  return kOk;
}

void add_run_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("model", cfg.model_path, "model file")->required();
  app->add_option("--init", cfg.init, "zero, lower, upper or custom:<path>");
  app->add_option("--schedule", cfg.schedule, "sync, seq or random");
  app->add_option("--tol-j", cfg.tol_J, "relative Frobenius tolerance on J");
  app->add_option("--tol-v", cfg.tol_v, "sup-norm tolerance on v");
  app->add_option("--max-iters", cfg.max_iters, "iteration budget");
  app->add_option("--seed", cfg.seed, "seed for the random schedule");
  app->add_flag("--strict", cfg.strict, "existence check before every update");
  app->add_option("--out", cfg.out_dir, "output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian belief propagation on linear Gaussian factor graphs", "gabp"};
  app.require_subcommand(1);

  std::string path;
  std::string out_dir;
  auto* validate = app.add_subcommand("validate", "check a model file");
  validate->add_option("model", path)->required();
  validate->add_option("--out", out_dir);

  auto* solve = app.add_subcommand("solve", "centralized MMSE solution");
  solve->add_option("model", path)->required();
  solve->add_option("--out", out_dir);

  RunConfig run_cfg;
  auto* run_cmd = app.add_subcommand("run", "run belief propagation");
  add_run_flags(run_cmd, run_cfg);

  RunConfig an_cfg;
  an_cfg.init = "upper";
  bool certify_bp = false;
  auto* analyze = app.add_subcommand("analyze", "convergence analysis report");
  add_run_flags(analyze, an_cfg);
  analyze->add_flag("--certify", certify_bp, "cross-check with a BP run");

  std::optional<double> omega;
  auto* convert = app.add_subcommand("convert-mrf", "MRF to linear Gaussian model");
  convert->add_option("mrf", path)->required();
  convert->add_option("--omega", omega);
  convert->add_option("--out", out_dir);

  RandomModelOptions gen_opts;
  std::string topology = "forest";
  auto* gen = app.add_subcommand("gen", "seeded random model");
  gen->add_option("--seed", gen_opts.seed);
  gen->add_option("--agents,-M", gen_opts.num_agents);
  gen->add_option("--min-dim", gen_opts.min_dim);
  gen->add_option("--max-dim", gen_opts.max_dim);
  gen->add_option("--topology", topology, "forest, single_loop_plus_forest or multi_loop");
  gen->add_option("--coeff-scale", gen_opts.coeff_scale);
  gen->add_option("--noise-scale", gen_opts.noise_scale);
  gen->add_option("--out", out_dir);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << '\n';
    return kInputFailure;
  }

  try {
    if (*validate) return cmd_validate(path, out_dir, out);
    if (*solve) return cmd_solve(path, out_dir, out);
    if (*run_cmd) return cmd_run(run_cfg, out);
    if (*analyze) return cmd_analyze(an_cfg, certify_bp, out);
    if (*convert) return cmd_convert(path, omega, out_dir, out);
    if (*gen) {
      try {
        gen_opts.topology = topology_kind_from_string(topology);
      } catch (const Error& ex) {
        throw InputFailure(ex.what());
      }
      return cmd_gen(gen_opts, out_dir, out);
    }
  } catch (const FormatError& ex) {
    err << "input error: " << ex.what() << '\n';
    return kInputFailure;
  } catch (const InputFailure& ex) {
    err << "input error: " << ex.what() << '\n';
    return kInputFailure;
  } catch (const InvalidInit& ex) {
    err << "input error: " << ex.what() << '\n';
    return kInputFailure;
  } catch (const InvalidModel& ex) {
    err << "invalid model: " << ex.report().summary() << '\n';
    return kDomainFailure;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kDomainFailure;
  }
  return kDomainFailure;
}

}  // namespace gabp::cli
