#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "jmlgm/predict.hpp"
#include "jmlgm/simulate.hpp"
#include "support.hpp"

using namespace jmlgm;
using jmlgm::testing::error_code;

namespace {

inference::HyperSummary hyper(const std::string& name, double mean) {
  inference::HyperSummary h;
  h.name = name;
  h.user.mean = mean;
  return h;
}

void add_latent(inference::FitResult& f, const std::string& name, double mean) {
  inference::Summary s;
  s.mean = mean;
  f.latent.names.push_back(name);
  f.latent.values.push_back(s);
}

model::JointData two_subjects() {
  model::JointData d;
  d.long_rows = {{1, 0.0, 1.0, {}}, {1, 1.0, 1.5, {}}, {2, 0.0, 0.2, {}}, {2, 1.0, 0.1, {}}};
  d.surv_rows = {{1, 1.5, 1, {}}, {2, 2.0, 0, {}}};
  return d;
}

std::vector<double> grid(double hi, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(hi * i / n);
  return t;
}

}  // namespace

TEST_CASE("Kaplan-Meier hand cases") {
  const auto a = predict::kaplan_meier({{1, 1.0, 0, {}}, {2, 2.0, 1, {}}, {3, 3.0, 1, {}}});
  CHECK(predict::step_value(a, 2.0) == doctest::Approx(0.5));
  CHECK(predict::step_value(a, 3.0) == doctest::Approx(0.0));
  CHECK(predict::step_value(a, 1.5) == doctest::Approx(1.0));
  CHECK(a.times.front() == 0.0);
  CHECK(a.survival.front() == 1.0);
  CHECK(a.kind == predict::CurveKind::KaplanMeier);

  const auto c = predict::kaplan_meier({{1, 1.0, 0, {}}, {2, 2.0, 0, {}}});
  for (double t : {0.0, 0.5, 1.0, 5.0}) CHECK(predict::step_value(c, t) == 1.0);

  const auto e = predict::kaplan_meier({{1, 4.0, 1, {}}, {2, 1.0, 1, {}}, {3, 3.0, 1, {}}, {4, 2.0, 1, {}}});
  CHECK(predict::step_value(e, 1.0) == doctest::Approx(0.75));
  CHECK(predict::step_value(e, 2.5) == doctest::Approx(0.5));
  CHECK(predict::step_value(e, 3.0) == doctest::Approx(0.25));
  CHECK(predict::step_value(e, 4.0) == doctest::Approx(0.0));
  for (std::size_t i = 1; i < e.survival.size(); ++i) CHECK(e.survival[i] <= e.survival[i - 1]);

  CHECK(error_code([] { predict::kaplan_meier({}); }) == ErrorCode::EmptyData);
}

TEST_CASE("Kaplan-Meier with ties and no censoring is the empirical survival") {
  std::vector<model::SurvRow> rows;
  const double t[] = {0.5, 1.0, 1.0, 2.0, 2.0, 2.0, 3.5};
  for (int i = 0; i < 7; ++i) rows.push_back({i + 1, t[i], 1, {}});
  const auto km = predict::kaplan_meier(rows);
  for (double s : {0.2, 0.5, 0.9, 1.0, 1.9, 2.0, 3.0, 3.5, 4.0}) {
    const double empirical = static_cast<double>(std::count_if(std::begin(t), std::end(t), [&](double v) { return v > s; })) / 7;
    CHECK(predict::step_value(km, s) == doctest::Approx(empirical));
  }
}

TEST_CASE("unit exponential plug-in") {
  model::JointData d;
  d.surv_rows = {{1, 2.0, 1, {}}};
  model::ModelConfig cfg;
  model::StackedDesign design(d, cfg);
  inference::FitResult fit;
  fit.hyper = {hyper("kappa", 1.0)};
  add_latent(fit, "gamma[intercept]", 0.0);
  const auto c = predict::subject_survival(fit, design, 1, {0.0, 1.0, 2.0});
  CHECK(c.survival[0] == 1.0);
  CHECK(c.survival[1] == doctest::Approx(0.3679).epsilon(1e-4));
  CHECK(c.survival[2] == doctest::Approx(std::exp(-2.0)));
  CHECK(c.subject == 1);
  CHECK(error_code([&] { predict::subject_survival(fit, design, 7, {1.0}); }) == ErrorCode::UnknownSubject);
  CHECK(error_code([&] { predict::subject_survival(fit, design, 1, {-1.0}); }) == ErrorCode::DomainError);
}

TEST_CASE("subject curves against the population curve") {
  model::ModelConfig cfg;
  cfg.association = model::Association::InterceptOnly;
  cfg.random_effects = model::RandomEffects::Intercept;
  cfg.spline.n_knots = 3;
  model::StackedDesign design(two_subjects(), cfg);
  inference::FitResult fit;
  fit.hyper = {hyper("kappa", 1.3), hyper("nu", 0.8)};
  add_latent(fit, "gamma[intercept]", -1.0);
  add_latent(fit, "w[1]", 2.5);
  add_latent(fit, "w[2]", 0.0);
  const auto times = grid(4.0, 80);
  const auto high = predict::subject_survival(fit, design, 1, times);
  const auto zero = predict::subject_survival(fit, design, 2, times);
  const auto mean = predict::mean_survival(fit, design, times);
  CHECK(mean.kind == predict::CurveKind::ModelMean);
  for (std::size_t i = 1; i < times.size(); ++i) {
    CHECK(high.survival[i] < mean.survival[i]);
    CHECK(zero.survival[i] == doctest::Approx(mean.survival[i]));
    CHECK(high.survival[i] <= high.survival[i - 1]);
    CHECK(mean.survival[i] <= mean.survival[i - 1]);
  }
  CHECK(high.survival[0] == 1.0);

  fit.hyper[1].user.mean = 0.0;
  const auto a = predict::subject_survival(fit, design, 1, times);
  const auto b = predict::subject_survival(fit, design, 2, times);
  CHECK(a.survival == b.survival);
}

TEST_CASE("fitted trajectories") {
  sim::Scenario sc;
  sc.n_subjects = 40;
  sc.seed = 31;
  sc.tau_eps = 400.0;
  const auto s = sim::simulate_joint(sc);
  model::ModelConfig cfg;
  cfg.association = model::Association::InterceptOnly;
  cfg.random_effects = model::RandomEffects::Intercept;
  cfg.spline.n_knots = 12;
  auto design = std::make_shared<const model::StackedDesign>(s.data, cfg);
  const auto fit = inference::fit(design);
  predict::TrajectoryModel tm(fit, design);

  int inside = 0, total = 0;
  for (const auto& row : s.data.long_rows) {
    const auto p = tm.trajectory(row.subject, {row.time}).front();
    const double sd = (p.upper - p.mean) / 1.959963984540054;
    CHECK(p.lower < p.mean);
    inside += std::abs(p.mean - row.y) < 2 * std::hypot(sd, 1 / std::sqrt(sc.tau_eps));
    ++total;
  }
  CHECK(inside >= 0.9 * total);
  CHECK(error_code([&] { tm.trajectory(1, {design->knots().back() + 1.0}); }) == ErrorCode::TimeOutsideKnotRange);
  CHECK(error_code([&] { tm.trajectory(12345, {1.0}); }) == ErrorCode::UnknownSubject);
}

TEST_CASE("trajectory bands narrow as the noise precision grows") {
  sim::Scenario sc;
  sc.n_subjects = 30;
  sc.seed = 32;
  const auto s = sim::simulate_joint(sc);
  const auto width = [&](double tau) {
    model::ModelConfig cfg;
    cfg.association = model::Association::InterceptOnly;
    cfg.random_effects = model::RandomEffects::Intercept;
    cfg.spline.n_knots = 8;
    cfg.priors["tau_eps"] = priors::PriorSpec::fixed(tau);
    auto design = std::make_shared<const model::StackedDesign>(s.data, cfg);
    const auto fit = inference::fit(design);
    predict::TrajectoryModel tm(fit, design);
    double w = 0;
    for (const auto& p : tm.trajectory(3, {0.0, 0.5, 1.0})) w += p.upper - p.lower;
    return w;
  };
  CHECK(width(100.0) < width(10.0));
  CHECK(width(10.0) < width(1.0));
}

TEST_CASE("constant trajectory gives a flat spline band") {
  sim::Scenario sc;
  sc.n_subjects = 150;
  sc.seed = 33;
  sc.trajectory = [](double) { return 1.0; };
  const auto s = sim::simulate_joint(sc);
  model::ModelConfig cfg;
  cfg.association = model::Association::InterceptOnly;
  cfg.random_effects = model::RandomEffects::Intercept;
  const auto fit = inference::fit(std::make_shared<const model::StackedDesign>(s.data, cfg));
  int best = 0;
  for (const auto& k : fit.spline) {
    for (double c : {k.value.q025, k.value.q975}) {
      int n = 0;
      for (const auto& j : fit.spline) n += j.value.q025 <= c && c <= j.value.q975;
      best = std::max(best, n);
    }
  }
  CHECK(best >= 0.95 * static_cast<double>(fit.spline.size()));
}
