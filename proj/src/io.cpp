#include "jmlgm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "jmlgm/errors.hpp"

namespace jmlgm::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void row_error(const std::string& label, int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, label + " row " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& s, const std::string& label, int line, const std::string& column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    row_error(label, line, "column '" + column + "' is not a finite number: '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s, const std::string& label, int line, const std::string& column) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    row_error(label, line, "column '" + column + "' is not an integer: '" + s + "'");
  }
  return v;
}

/// Reads the header and the data rows; `fixed` names the leading columns.
std::vector<std::pair<int, std::vector<std::string>>> read_table(std::istream& in, const std::string& label,
                                                                 const std::vector<std::string>& fixed,
                                                                 std::vector<std::string>& extra) {
  std::string line;
  int n = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_line(line);
    break;
  }
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    std::string expected;
    for (const auto& f : fixed) expected += (expected.empty() ? "" : ",") + f;
    row_error(label, n == 0 ? 1 : n, "header must start with " + expected);
  }
  extra.assign(header.begin() + static_cast<std::ptrdiff_t>(fixed.size()), header.end());
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (h.empty()) row_error(label, n, "empty column name");
    if (!seen.insert(h).second) row_error(label, n, "duplicate column '" + h + "'");
  }
  std::vector<std::pair<int, std::vector<std::string>>> rows;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      row_error(label, n, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    rows.emplace_back(n, std::move(cells));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

void dump_into(const Json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + Json(it.key()).dump() + ": ";
      dump_into(it.value(), out, depth + 1);
    }
    out += "\n" + close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        dump_into(j[i], out, depth + 1);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      dump_into(j[i], out, depth + 1);
    }
    out += "\n" + close + "]";
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    out += std::isfinite(v) ? format_double(v) : "null";
  } else {
    out += j.dump();
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("key '") + key + "': " + e.what());
  }
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw Error(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
  }
}

model::Baseline parse_baseline(const std::string& s) {
  if (s == "weibull") return model::Baseline::Weibull;
  if (s == "exponential") return model::Baseline::Exponential;
  throw Error(ErrorCode::InvalidConfig, "baseline must be \"weibull\" or \"exponential\", got \"" + s + "\"");
}

model::RandomEffects parse_random_effects(const std::string& s) {
  if (s == "intercept_slope") return model::RandomEffects::IntSlope;
  if (s == "intercept") return model::RandomEffects::Intercept;
  throw Error(ErrorCode::InvalidConfig, "random_effects must be \"intercept_slope\" or \"intercept\", got \"" + s + "\"");
}

std::string random_effects_key(model::RandomEffects r) {
  return r == model::RandomEffects::IntSlope ? "intercept_slope" : "intercept";
}

priors::PriorSpec parse_prior(const Json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("type")) throw Error(ErrorCode::InvalidConfig, "prior for " + name + " needs a \"type\"");
  const auto type = j.at("type").get<std::string>();
  if (type == "pc_precision") {
    check_keys(j, {"type", "u", "alpha"}, "prior " + name);
    return priors::PriorSpec::pc_precision(get_or(j, "u", 1.0), get_or(j, "alpha", 0.01));
  }
  if (type == "gaussian") {
    check_keys(j, {"type", "mean", "precision"}, "prior " + name);
    return priors::PriorSpec::gaussian(get_or(j, "mean", 0.0), get_or(j, "precision", 0.001));
  }
  if (type == "fixed") {
    check_keys(j, {"type", "value"}, "prior " + name);
    if (!j.contains("value")) throw Error(ErrorCode::InvalidConfig, "fixed prior for " + name + " needs a value");
    return priors::PriorSpec::fixed(get_or(j, "value", 0.0));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown prior type \"" + type + "\" for " + name);
}

Json prior_json(const priors::PriorSpec& p) {
  switch (p.type) {
    case priors::PriorSpec::Type::PcPrecision: return Json{{"type", "pc_precision"}, {"u", p.pc.u}, {"alpha", p.pc.alpha}};
    case priors::PriorSpec::Type::Gaussian: return Json{{"type", "gaussian"}, {"mean", p.mean}, {"precision", p.precision}};
    case priors::PriorSpec::Type::Fixed: return Json{{"type", "fixed"}, {"value", p.value}};
  }
  return Json();
}

Json summary_json(const inference::Summary& s) {
  return Json{{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"q50", s.q50}, {"q975", s.q975}, {"mode", s.mode}};
}

inference::Summary parse_summary(const Json& j) {
  inference::Summary s;
  s.mean = j.at("mean").get<double>();
  s.sd = j.at("sd").get<double>();
  s.q025 = j.at("q025").get<double>();
  s.q50 = j.at("q50").get<double>();
  s.q975 = j.at("q975").get<double>();
  s.mode = j.at("mode").get<double>();
  return s;
}

Json hyper_json(const inference::HyperSummary& h) {
  Json j = Json{{"name", h.name}, {"fixed", h.fixed}};
  const Json sj = summary_json(h.user);
  for (auto it = sj.begin(); it != sj.end(); ++it) j[it.key()] = it.value();
  j["internal_mean"] = h.internal_mean;
  j["internal_sd"] = h.internal_sd;
  return j;
}

inference::HyperSummary parse_hyper(const Json& j) {
  inference::HyperSummary h;
  h.name = j.at("name").get<std::string>();
  h.fixed = j.at("fixed").get<bool>();
  h.user = parse_summary(j);
  h.internal_mean = j.at("internal_mean").get<double>();
  h.internal_sd = j.at("internal_sd").get<double>();
  return h;
}

Json param_json(const oracle::ParamSummary& p) {
  return Json{{"name", p.name}, {"mean", p.mean}, {"sd", p.sd}, {"q025", p.q025},
              {"q975", p.q975}, {"ess", p.ess}, {"mcse", p.mcse}};
}

}  // namespace

void read_long_csv(std::istream& in, const std::string& label, model::JointData& data) {
  std::vector<std::string> extra;
  const auto rows = read_table(in, label, {"id", "time", "y"}, extra);
  data.x_names = extra;
  data.long_rows.clear();
  for (const auto& [line, cells] : rows) {
    model::LongRow r;
    r.subject = to_int(cells[0], label, line, "id");
    r.time = to_double(cells[1], label, line, "time");
    r.y = to_double(cells[2], label, line, "y");
    if (r.time < 0.0) row_error(label, line, "time must be >= 0");
    for (std::size_t k = 0; k < extra.size(); ++k) r.x.push_back(to_double(cells[3 + k], label, line, extra[k]));
    data.long_rows.push_back(std::move(r));
  }
}

void read_surv_csv(std::istream& in, const std::string& label, model::JointData& data) {
  std::vector<std::string> extra;
  const auto rows = read_table(in, label, {"id", "time", "event"}, extra);
  data.z_names = extra;
  data.surv_rows.clear();
  for (const auto& [line, cells] : rows) {
    model::SurvRow r;
    r.subject = to_int(cells[0], label, line, "id");
    r.time = to_double(cells[1], label, line, "time");
    r.event = to_int(cells[2], label, line, "event");
    if (!(r.time > 0.0)) row_error(label, line, "survival time must be > 0");
    if (r.event != 0 && r.event != 1) row_error(label, line, "event must be 0 or 1");
    for (std::size_t k = 0; k < extra.size(); ++k) r.z.push_back(to_double(cells[3 + k], label, line, extra[k]));
    data.surv_rows.push_back(std::move(r));
  }
}

void read_long_csv(const std::filesystem::path& path, model::JointData& data) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  read_long_csv(in, path.filename().string(), data);
}

void read_surv_csv(const std::filesystem::path& path, model::JointData& data) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  read_surv_csv(in, path.filename().string(), data);
}

std::string long_csv(const model::JointData& data) {
  std::string out = "id,time,y";
  for (const auto& n : data.x_names) out += "," + n;
  out += "\n";
  for (const auto& r : data.long_rows) {
    out += std::to_string(r.subject) + "," + format_double(r.time) + "," + format_double(r.y);
    for (double x : r.x) out += "," + format_double(x);
    out += "\n";
  }
  return out;
}

std::string surv_csv(const model::JointData& data) {
  std::string out = "id,time,event";
  for (const auto& n : data.z_names) out += "," + n;
  out += "\n";
  for (const auto& r : data.surv_rows) {
    out += std::to_string(r.subject) + "," + format_double(r.time) + "," + std::to_string(r.event);
    for (double z : r.z) out += "," + format_double(z);
    out += "\n";
  }
  return out;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + e.what());
  }
}

model::ModelConfig parse_model_config(const Json& j) {
  check_keys(j, {"association", "baseline", "random_effects", "spline", "frailty", "long_intercept", "surv_intercept",
                 "priors", "grid"},
             "model config");
  model::ModelConfig c;
  if (j.contains("association")) c.association = model::parse_association(get_or<std::string>(j, "association", ""));
  if (j.contains("baseline")) c.baseline = parse_baseline(get_or<std::string>(j, "baseline", ""));
  if (j.contains("random_effects")) c.random_effects = parse_random_effects(get_or<std::string>(j, "random_effects", ""));
  if (j.contains("spline")) {
    const auto& s = j.at("spline");
    check_keys(s, {"n_knots", "scaled", "knots"}, "spline");
    c.spline.n_knots = get_or(s, "n_knots", c.spline.n_knots);
    c.spline.scaled = get_or(s, "scaled", c.spline.scaled);
    c.spline.knots = get_or(s, "knots", c.spline.knots);
  }
  c.frailty = get_or(j, "frailty", c.frailty);
  c.long_intercept = get_or(j, "long_intercept", c.long_intercept);
  c.surv_intercept = get_or(j, "surv_intercept", c.surv_intercept);
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    if (!p.is_object()) throw Error(ErrorCode::InvalidConfig, "priors must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) c.priors[it.key()] = parse_prior(it.value(), it.key());
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"step", "drop", "max_dense_dim", "ccd_f0", "hessian_step", "max_evaluations", "simplex_tolerance"},
               "grid");
    c.grid.step = get_or(g, "step", c.grid.step);
    c.grid.drop = get_or(g, "drop", c.grid.drop);
    c.grid.max_dense_dim = get_or(g, "max_dense_dim", c.grid.max_dense_dim);
    c.grid.ccd_f0 = get_or(g, "ccd_f0", c.grid.ccd_f0);
    c.grid.hessian_step = get_or(g, "hessian_step", c.grid.hessian_step);
    c.grid.max_evaluations = get_or(g, "max_evaluations", c.grid.max_evaluations);
    c.grid.simplex_tolerance = get_or(g, "simplex_tolerance", c.grid.simplex_tolerance);
    if (!(c.grid.step > 0.0) || !(c.grid.drop > 0.0) || c.grid.max_dense_dim < 0 || !(c.grid.ccd_f0 > 1.0) ||
        !(c.grid.hessian_step > 0.0) || c.grid.max_evaluations <= 0 || !(c.grid.simplex_tolerance > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "grid settings out of range");
    }
  }
  return c;
}

Json model_config_json(const model::ModelConfig& c) {
  Json j;
  j["association"] = model::association_key(c.association);
  j["baseline"] = c.baseline == model::Baseline::Weibull ? "weibull" : "exponential";
  j["random_effects"] = random_effects_key(c.random_effects);
  j["spline"] = Json{{"n_knots", c.spline.n_knots}, {"scaled", c.spline.scaled}, {"knots", c.spline.knots}};
  j["frailty"] = c.frailty;
  j["long_intercept"] = c.long_intercept;
  j["surv_intercept"] = c.surv_intercept;
  Json p = Json::object();
  for (const auto& [name, spec] : c.priors) p[name] = prior_json(spec);
  j["priors"] = p;
  j["grid"] = Json{{"step", c.grid.step},
                   {"drop", c.grid.drop},
                   {"max_dense_dim", c.grid.max_dense_dim},
                   {"ccd_f0", c.grid.ccd_f0},
                   {"hessian_step", c.grid.hessian_step},
                   {"max_evaluations", c.grid.max_evaluations},
                   {"simplex_tolerance", c.grid.simplex_tolerance}};
  return j;
}

sim::Scenario parse_scenario(const Json& j) {
  check_keys(j, {"n_subjects", "schedule", "trajectory_polynomial", "beta", "surv_intercept", "gamma", "random_effects",
                 "sigma_w", "sigma_v", "rho", "association", "nu", "kappa", "tau_eps", "horizon", "hazard", "seed"},
             "scenario");
  sim::Scenario s;
  s.n_subjects = get_or(j, "n_subjects", s.n_subjects);
  s.schedule = get_or(j, "schedule", s.schedule);
  if (j.contains("trajectory_polynomial")) {
    const auto c = get_or(j, "trajectory_polynomial", std::vector<double>{});
    if (c.empty()) throw Error(ErrorCode::InvalidConfig, "trajectory_polynomial needs at least one coefficient");
    s.trajectory = [c](double t) {
      double acc = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
      return acc;
    };
  }
  s.beta = get_or(j, "beta", s.beta);
  s.surv_intercept = get_or(j, "surv_intercept", s.surv_intercept);
  s.gamma = get_or(j, "gamma", s.gamma);
  if (j.contains("random_effects")) s.random_effects = parse_random_effects(get_or<std::string>(j, "random_effects", ""));
  s.sigma_w = get_or(j, "sigma_w", s.sigma_w);
  s.sigma_v = get_or(j, "sigma_v", s.sigma_v);
  s.rho = get_or(j, "rho", s.rho);
  if (j.contains("association")) s.association = model::parse_association(get_or<std::string>(j, "association", ""));
  if (j.contains("nu")) {
    if (j.at("nu").is_array()) s.nu = get_or(j, "nu", s.nu);
    else s.nu = {get_or(j, "nu", 0.0)};
  }
  s.kappa = get_or(j, "kappa", s.kappa);
  s.tau_eps = get_or(j, "tau_eps", s.tau_eps);
  s.horizon = get_or(j, "horizon", s.horizon);
  if (j.contains("hazard")) {
    const auto h = get_or<std::string>(j, "hazard", "");
    if (h == "event_time") s.mode = sim::HazardMode::AtEventTime;
    else if (h == "time_varying") s.mode = sim::HazardMode::ExactTimeVarying;
    else throw Error(ErrorCode::InvalidConfig, "hazard must be \"event_time\" or \"time_varying\"");
  }
  s.seed = get_or(j, "seed", s.seed);
  return s;
}

Json truth_json(const sim::Scenario& s, const sim::Simulated& sim) {
  Json j;
  j["n_subjects"] = s.n_subjects;
  j["schedule"] = s.schedule.empty() ? sim::default_schedule() : s.schedule;
  j["beta"] = s.beta;
  j["surv_intercept"] = s.surv_intercept;
  j["gamma"] = s.gamma;
  j["random_effects"] = random_effects_key(s.random_effects);
  j["sigma_w"] = s.sigma_w;
  j["sigma_v"] = s.sigma_v;
  j["rho"] = s.rho;
  j["association"] = model::association_key(s.association);
  j["nu"] = s.nu;
  j["kappa"] = s.kappa;
  j["tau_eps"] = s.tau_eps;
  j["horizon"] = s.horizon;
  j["hazard"] = s.mode == sim::HazardMode::AtEventTime ? "event_time" : "time_varying";
  j["seed"] = s.seed;
  Json subjects = Json::array();
  for (const auto& t : sim.subjects) {
    const Json event_time = std::isfinite(t.event_time) ? Json(t.event_time) : Json(nullptr);
    subjects.push_back(Json{{"id", t.id}, {"w", t.w}, {"v", t.v}, {"event_time", event_time}, {"residual", t.residual}});
  }
  j["subjects"] = subjects;
  return j;
}

Json fit_json(const inference::FitResult& f) {
  Json j;
  j["tag"] = "laplace";
  j["config"] = model_config_json(f.config);
  j["subject_ids"] = f.subject_ids;
  j["knots"] = f.knots;
  j["fixed_names"] = f.fixed_names;
  j["log_marginal_likelihood"] = f.log_marginal_likelihood;
  j["separated"] = f.separated;
  Json parts = Json::array();
  for (const auto& p : f.parts) {
    Json mode = Json::object();
    for (std::size_t k = 0; k < p.grid.names.size(); ++k) mode[p.grid.names[k]] = p.grid.mode[static_cast<Eigen::Index>(k)];
    parts.push_back(Json{{"label", p.label},
                         {"strategy", p.grid.strategy},
                         {"points", p.grid.points.size()},
                         {"evaluations", p.grid.evaluations},
                         {"log_evidence", p.grid.log_evidence},
                         {"internal_mode", mode}});
  }
  j["parts"] = parts;
  Json mode = Json::object();
  for (const auto& [name, value] : f.theta_mode) mode[name] = value;
  j["theta_mode"] = mode;
  Json hyper = Json::array();
  for (const auto& h : f.hyper) hyper.push_back(hyper_json(h));
  j["hyperparameters"] = hyper;
  Json derived = Json::array();
  for (const auto& h : f.derived) derived.push_back(hyper_json(h));
  j["derived"] = derived;
  Json latent = Json::array();
  for (std::size_t k = 0; k < f.latent.names.size(); ++k) {
    Json e = Json{{"name", f.latent.names[k]}};
    const Json sj = summary_json(f.latent.values[k]);
    for (auto it = sj.begin(); it != sj.end(); ++it) e[it.key()] = it.value();
    latent.push_back(e);
  }
  j["latent"] = latent;
  Json spline = Json::array();
  for (const auto& s : f.spline) {
    Json e = Json{{"knot", s.knot}};
    const Json sj = summary_json(s.value);
    for (auto it = sj.begin(); it != sj.end(); ++it) e[it.key()] = it.value();
    spline.push_back(e);
  }
  j["spline"] = spline;
  return j;
}

inference::FitResult parse_fit(const Json& j) {
  try {
    if (j.at("tag").get<std::string>() != "laplace") throw Error(ErrorCode::ParseError, "not a fit result");
    inference::FitResult f;
    f.config = parse_model_config(j.at("config"));
    f.subject_ids = j.at("subject_ids").get<std::vector<int>>();
    f.knots = j.at("knots").get<std::vector<double>>();
    f.fixed_names = j.at("fixed_names").get<std::vector<std::string>>();
    f.log_marginal_likelihood = j.at("log_marginal_likelihood").get<double>();
    f.separated = j.at("separated").get<bool>();
    for (auto it = j.at("theta_mode").begin(); it != j.at("theta_mode").end(); ++it) {
      f.theta_mode.emplace_back(it.key(), it.value().get<double>());
    }
    for (const auto& h : j.at("hyperparameters")) f.hyper.push_back(parse_hyper(h));
    for (const auto& h : j.at("derived")) f.derived.push_back(parse_hyper(h));
    for (const auto& e : j.at("latent")) {
      f.latent.names.push_back(e.at("name").get<std::string>());
      f.latent.values.push_back(parse_summary(e));
    }
    for (const auto& e : j.at("spline")) f.spline.push_back({e.at("knot").get<double>(), parse_summary(e)});
    for (const auto& p : j.at("parts")) {
      inference::FitPart part;
      part.label = p.at("label").get<std::string>();
      part.grid.strategy = p.at("strategy").get<std::string>();
      part.grid.evaluations = p.at("evaluations").get<int>();
      part.grid.log_evidence = p.at("log_evidence").get<double>();
      // Only the number of grid points is stored.
      part.grid.points.resize(p.at("points").get<std::size_t>());
      const auto& mode = p.at("internal_mode");
      part.grid.mode.resize(static_cast<Eigen::Index>(mode.size()));
      Eigen::Index k = 0;
      for (auto it = mode.begin(); it != mode.end(); ++it, ++k) {
        part.grid.names.push_back(it.key());
        part.grid.mode[k] = it.value().get<double>();
      }
      f.parts.push_back(std::move(part));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed fit.json: ") + e.what());
  }
}

Json oracle_json(const oracle::McmcResult& r) {
  Json j;
  j["tag"] = "oracle";
  Json acc = Json::object();
  for (std::size_t b = 0; b < r.block_names.size(); ++b) {
    acc[r.block_names[b]] = Json{{"acceptance", r.acceptance[b]}, {"scale", r.scales[b]}};
  }
  j["moves"] = acc;
  j["draws"] = r.theta_samples.rows();
  Json hyper = Json::array();
  for (std::size_t k = 0; k < r.theta_user.size(); ++k) {
    Json e = param_json(r.theta_user[k]);
    e["internal_mean"] = r.theta_internal[k].mean;
    e["internal_sd"] = r.theta_internal[k].sd;
    e["internal_ess"] = r.theta_internal[k].ess;
    e["internal_mcse"] = r.theta_internal[k].mcse;
    hyper.push_back(e);
  }
  j["hyperparameters"] = hyper;
  Json latent = Json::array();
  for (const auto& p : r.latent) latent.push_back(param_json(p));
  j["latent"] = latent;
  return j;
}

std::string curve_csv(const std::vector<predict::SurvivalCurve>& curves) {
  std::string out = "time,value,kind,subject_id\n";
  for (const auto& c : curves) {
    const std::string subject = c.subject ? std::to_string(*c.subject) : "";
    for (std::size_t k = 0; k < c.times.size(); ++k) {
      out += format_double(c.times[k]) + "," + format_double(c.survival[k]) + "," + predict::curve_kind_name(c.kind) +
             "," + subject + "\n";
    }
  }
  return out;
}

std::string trajectory_csv(const std::vector<std::pair<int, std::vector<predict::TrajectoryPoint>>>& trajectories) {
  std::string out = "subject_id,time,mean,lower,upper\n";
  for (const auto& [id, points] : trajectories) {
    for (const auto& p : points) {
      out += std::to_string(id) + "," + format_double(p.time) + "," + format_double(p.mean) + "," +
             format_double(p.lower) + "," + format_double(p.upper) + "\n";
    }
  }
  return out;
}

std::string dump(const Json& j) {
  std::string out;
  dump_into(j, out, 0);
  out += "\n";
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::ParseError, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::ParseError, "cannot replace " + path.string());
  }
}

}  // namespace jmlgm::io
