#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "jmlgm/errors.hpp"
#include "jmlgm/inference.hpp"
#include "jmlgm/io.hpp"
#include "jmlgm/oracle.hpp"
#include "jmlgm/predict.hpp"
#include "jmlgm/simulate.hpp"

namespace fs = std::filesystem;
using namespace jmlgm;

namespace {

enum Exit { kOk = 0, kParse = 2, kSimulation = 3, kOptimizer = 4, kNonFinite = 5, kOracle = 6 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::OptimizerFailed:
    case ErrorCode::SingularHessian:
    case ErrorCode::EmptyGrid:
    case ErrorCode::NewtonDiverged:
    case ErrorCode::MaxIterations:
    case ErrorCode::NotPositiveDefinite:
      return kOptimizer;
    case ErrorCode::DimensionTooLarge:
    case ErrorCode::DegenerateTarget:
      return kOracle;
    case ErrorCode::BisectionFailed:
      return kSimulation;
    default:
      return kParse;
  }
}

struct Global {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool verbose = false;
};

void log(const Global& g, const std::string& msg) {
  if (g.verbose) std::cerr << msg << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "not a number in list: '" + item + "'");
    }
  }
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
  return out;
}

model::JointData load_data(const std::string& long_path, const std::string& surv_path) {
  model::JointData data;
  if (long_path.empty() && surv_path.empty()) throw Error(ErrorCode::ParseError, "need --long and/or --surv");
  if (!long_path.empty()) io::read_long_csv(long_path, data);
  if (!surv_path.empty()) io::read_surv_csv(surv_path, data);
  return data;
}

model::ModelConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return io::parse_model_config(io::read_json(path));
}

bool finite_fit(const inference::FitResult& f) {
  auto ok = [](const inference::Summary& s) {
    return std::isfinite(s.mean) && std::isfinite(s.sd) && std::isfinite(s.q025) && std::isfinite(s.q975);
  };
  if (!std::isfinite(f.log_marginal_likelihood)) return false;
  for (const auto& h : f.hyper) {
    if (!ok(h.user)) return false;
  }
  for (const auto& v : f.latent.values) {
    if (!ok(v)) return false;
  }
  return true;
}

int cmd_simulate(const Global& g, const std::string& config, const std::string& out) {
  sim::Scenario sc;
  try {
    if (!config.empty()) sc = io::parse_scenario(io::read_json(config));
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kParse;
  }
  if (g.seed) sc.seed = *g.seed;
  sim::Simulated s;
  try {
    s = sim::simulate_joint(sc);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::InvalidConfig ? kParse : kSimulation;
  }
  fs::create_directories(out);
  io::write_atomic(fs::path(out) / "long.csv", io::long_csv(s.data));
  io::write_atomic(fs::path(out) / "surv.csv", io::surv_csv(s.data));
  io::write_atomic(fs::path(out) / "truth.json", io::dump(io::truth_json(sc, s)));
  log(g, "simulated " + std::to_string(s.data.surv_rows.size()) + " subjects, " +
             std::to_string(s.data.long_rows.size()) + " longitudinal rows");
  return kOk;
}

int cmd_fit(const Global& g, const std::string& long_path, const std::string& surv_path, const std::string& config,
            const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = load_config(config);
  cfg.grid.threads = g.threads;
  auto design = std::make_shared<const model::StackedDesign>(load_data(long_path, surv_path), cfg);
  log(g, "stacked " + std::to_string(design->n_long()) + " longitudinal and " + std::to_string(design->n_surv()) +
             " survival rows, latent dimension " + std::to_string(design->layout().dim()));
  const auto t1 = std::chrono::steady_clock::now();
  const auto fit = inference::fit(design);
  const double fit_seconds = seconds_since(t1);
  if (!finite_fit(fit)) {
    std::cerr << "posterior summaries are not finite\n";
    return kNonFinite;
  }
  fs::create_directories(out);
  io::write_atomic(fs::path(out) / "fit.json", io::dump(io::fit_json(fit)));
  if (design->has_long()) {
    const predict::TrajectoryModel traj(fit, design);
    const auto times = linspace(design->knots().front(), design->knots().back(), 41);
    std::vector<std::pair<int, std::vector<predict::TrajectoryPoint>>> rows;
    for (int id : design->subject_ids()) rows.emplace_back(id, traj.trajectory(id, times));
    io::write_atomic(fs::path(out) / "trajectory.csv", io::trajectory_csv(rows));
  }
  std::ostringstream logtxt;
  logtxt << "subjects " << design->n_subjects() << "\n"
         << "longitudinal_rows " << design->n_long() << "\n"
         << "survival_rows " << design->n_surv() << "\n"
         << "latent_dim " << design->layout().dim() << "\n";
  for (const auto& p : fit.parts) {
    logtxt << "part " << p.label << " strategy " << p.grid.strategy << " points " << p.grid.points.size()
           << " evaluations " << p.grid.evaluations << "\n";
  }
  logtxt << "fit_seconds " << fit_seconds << "\n"
         << "total_seconds " << seconds_since(t0) << "\n";
  io::write_atomic(fs::path(out) / "run.log", logtxt.str());
  log(g, logtxt.str());
  return kOk;
}

int cmd_predict(const Global& g, const std::string& fit_path, const std::string& long_path,
                const std::string& surv_path, const std::string& subjects, const std::string& times_arg,
                const std::string& out) {
  if (!fs::exists(fit_path)) {
    std::cerr << "fit result not found: " << fit_path << "\n";
    return kParse;
  }
  auto fit = io::parse_fit(io::read_json(fit_path));
  auto cfg = fit.config;
  cfg.spline.knots = fit.knots;
  auto design = std::make_shared<const model::StackedDesign>(load_data(long_path, surv_path), cfg);
  std::vector<int> ids;
  if (!subjects.empty()) {
    for (double v : parse_list(subjects)) ids.push_back(static_cast<int>(v));
  }
  for (int id : ids) design->subject_index(id);
  double t_max = 0.0;
  for (const auto& r : design->data().surv_rows) t_max = std::max(t_max, r.time);
  const auto times = times_arg.empty() ? linspace(0.0, t_max > 0.0 ? t_max : 1.0, 101) : parse_list(times_arg);
  fs::create_directories(out);
  if (design->has_surv()) {
    std::vector<predict::SurvivalCurve> population = {predict::kaplan_meier(design->data().surv_rows),
                                                      predict::mean_survival(fit, *design, times)};
    io::write_atomic(fs::path(out) / "km.csv", io::curve_csv(population));
    for (int id : ids) {
      io::write_atomic(fs::path(out) / ("subject_" + std::to_string(id) + ".csv"),
                       io::curve_csv({predict::subject_survival(fit, *design, id, times)}));
    }
  }
  if (design->has_long() && !ids.empty()) {
    const predict::TrajectoryModel traj(fit, design);
    std::vector<double> ttimes;
    for (double t : linspace(design->knots().front(), design->knots().back(), 41)) ttimes.push_back(t);
    std::vector<std::pair<int, std::vector<predict::TrajectoryPoint>>> rows;
    for (int id : ids) rows.emplace_back(id, traj.trajectory(id, ttimes));
    io::write_atomic(fs::path(out) / "trajectory.csv", io::trajectory_csv(rows));
  }
  log(g, "wrote predictions for " + std::to_string(ids.size()) + " subjects");
  return kOk;
}

int cmd_compare(const Global& g, const std::string& long_path, const std::string& surv_path,
                const std::string& config, const std::string& out, oracle::McmcConfig mc) {
  auto cfg = load_config(config);
  cfg.grid.threads = g.threads;
  auto design = std::make_shared<const model::StackedDesign>(load_data(long_path, surv_path), cfg);
  if (g.seed) mc.seed = *g.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fit = inference::fit(design);
  log(g, "laplace fit in " + std::to_string(seconds_since(t0)) + " s");
  const auto t1 = std::chrono::steady_clock::now();
  const auto mcmc = oracle::run_mcmc(design, mc);
  log(g, "mcmc in " + std::to_string(seconds_since(t1)) + " s");

  std::ostringstream table;
  table << "parameter,scale,laplace_mean,mcmc_mean,mcmc_sd,ess,mcse,ratio,agree\n";
  auto row = [&](const std::string& name, const std::string& scale, double la, const oracle::ParamSummary& m) {
    const double diff = std::abs(la - m.mean);
    const bool agree = diff < std::max(0.3 * m.sd, 3.0 * m.mcse);
    table << name << "," << scale << "," << la << "," << m.mean << "," << m.sd << "," << m.ess << "," << m.mcse << ","
          << (m.sd > 0.0 ? diff / m.sd : 0.0) << "," << (agree ? "yes" : "no") << "\n";
  };
  table.precision(17);
  for (std::size_t k = 0; k < mcmc.theta_internal.size(); ++k) {
    const auto& h = fit.hyper_summary(mcmc.theta_internal[k].name);
    row(h.name, "internal", h.internal_mean, mcmc.theta_internal[k]);
    row(h.name, "user", h.user.mean, mcmc.theta_user[k]);
  }
  for (const auto& m : mcmc.latent) row(m.name, "latent", fit.latent_summary(m.name).mean, m);
  fs::create_directories(out);
  io::write_atomic(fs::path(out) / "compare.csv", table.str());
  io::write_atomic(fs::path(out) / "oracle.json", io::dump(io::oracle_json(mcmc)));
  io::write_atomic(fs::path(out) / "fit.json", io::dump(io::fit_json(fit)));
  std::cout << table.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate Bayesian inference for joint longitudinal and survival models"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--threads", g.threads, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose,-v", g.verbose, "Progress messages on stderr");

  std::string config, out = ".", long_path, surv_path, fit_path, subjects, times;
  oracle::McmcConfig mc;

  auto* sim = app.add_subcommand("simulate", "Simulate a joint data set");
  sim->add_option("--config", config, "Scenario JSON (default: built-in template)");
  sim->add_option("--out", out, "Output directory");

  auto* fit = app.add_subcommand("fit", "Fit the joint model");
  fit->add_option("--long", long_path, "Longitudinal CSV");
  fit->add_option("--surv", surv_path, "Survival CSV");
  fit->add_option("--config", config, "Model JSON");
  fit->add_option("--out", out, "Output directory");

  auto* pred = app.add_subcommand("predict", "Survival curves and trajectories from a fit");
  pred->add_option("--fit", fit_path, "fit.json")->required();
  pred->add_option("--long", long_path, "Longitudinal CSV");
  pred->add_option("--surv", surv_path, "Survival CSV");
  pred->add_option("--subjects", subjects, "Comma-separated subject ids");
  pred->add_option("--times", times, "Comma-separated prediction times");
  pred->add_option("--out", out, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Laplace fit against the MCMC oracle");
  cmp->add_option("--long", long_path, "Longitudinal CSV");
  cmp->add_option("--surv", surv_path, "Survival CSV");
  cmp->add_option("--config", config, "Model JSON");
  cmp->add_option("--out", out, "Output directory");
  cmp->add_option("--iterations", mc.iterations, "MCMC iterations");
  cmp->add_option("--burn-in", mc.burn_in, "Burn-in iterations");
  cmp->add_option("--thinning", mc.thinning, "Thinning interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kParse;
  }
  if (seed_opt->count() > 0) g.seed = seed;
#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (sim->parsed()) return cmd_simulate(g, config, out);
    if (fit->parsed()) return cmd_fit(g, long_path, surv_path, config, out);
    if (pred->parsed()) return cmd_predict(g, fit_path, long_path, surv_path, subjects, times, out);
    if (cmp->parsed()) return cmd_compare(g, long_path, surv_path, config, out, mc);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  }
  return kOk;
}
