#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "jmlgm/likelihoods.hpp"
#include "jmlgm/model.hpp"
#include "jmlgm/simulate.hpp"
#include "support.hpp"

using namespace jmlgm;
using jmlgm::testing::error_code;

namespace {

model::JointData three_subjects() {
  model::JointData d;
  d.x_names = {"x"};
  d.z_names = {"z"};
  const double times[3][2] = {{0.0, 1.0}, {0.5, 2.0}, {1.5, 3.0}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      d.long_rows.push_back({i + 1, times[i][j], 0.3 * i + j, {0.1 * (2 * i + j) - 0.2}});
    }
    d.surv_rows.push_back({i + 1, 1.0 + i, i % 2, {0.5 * i - 0.4}});
  }
  return d;
}

std::pair<int, double> bracket(const std::vector<double>& k, double t) {
  int j = 0;
  while (j + 2 < static_cast<int>(k.size()) && t >= k[static_cast<std::size_t>(j + 1)]) ++j;
  return {j, (k[static_cast<std::size_t>(j + 1)] - t) / (k[static_cast<std::size_t>(j + 1)] - k[static_cast<std::size_t>(j)])};
}

}  // namespace

TEST_CASE("stacking pads covariates with zeros") {
  model::JointData d;
  d.x_names = {"x"};
  d.z_names = {"z"};
  d.long_rows = {{1, 0.0, 1.0, {0.4}}, {1, 1.0, 2.0, {0.9}}};
  d.surv_rows = {{1, 2.0, 1, {-1.5}}};
  model::ModelConfig cfg;
  cfg.surv_intercept = false;
  cfg.spline.n_knots = 3;
  model::StackedDesign s(d, cfg);
  const Eigen::MatrixXd& f = s.fixed_design();
  REQUIRE(f.rows() == 3);
  REQUIRE(f.cols() == 2);
  CHECK(f.col(0) == Eigen::Vector3d(0.4, 0.9, 0.0));
  CHECK(f.col(1) == Eigen::Vector3d(0.0, 0.0, -1.5));

  model::JointData bare = d;
  bare.z_names.clear();
  bare.surv_rows[0].z.clear();
  model::StackedDesign b(bare, cfg);
  CHECK(b.fixed_design().cols() == 1);
  CHECK(b.p_surv() == 0);
}

TEST_CASE("stacked response layout") {
  const auto data = three_subjects();
  model::ModelConfig cfg;
  cfg.spline.n_knots = 4;
  model::StackedDesign s(data, cfg);
  REQUIRE(s.rows().size() == 9);
  int with_spline = 0;
  for (const auto& r : s.rows()) {
    with_spline += r.spline_knot.has_value();
    CHECK(r.shared_effect.has_value());
    if (r.kind == model::RowKind::Survival) {
      CHECK(std::isnan(r.y));
    } else {
      CHECK(r.event == -1);
    }
  }
  CHECK(with_spline == 6);
  for (int i = 0; i < 6; ++i) CHECK(s.rows()[static_cast<std::size_t>(i)].kind == model::RowKind::Longitudinal);

  const auto back = s.unstack();
  REQUIRE(back.long_rows.size() == data.long_rows.size());
  for (std::size_t i = 0; i < back.long_rows.size(); ++i) {
    CHECK(back.long_rows[i].subject == data.long_rows[i].subject);
    CHECK(back.long_rows[i].time == data.long_rows[i].time);
    CHECK(back.long_rows[i].y == data.long_rows[i].y);
    CHECK(back.long_rows[i].x == data.long_rows[i].x);
  }
  REQUIRE(back.surv_rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.surv_rows[i].subject == data.surv_rows[i].subject);
    CHECK(back.surv_rows[i].time == data.surv_rows[i].time);
    CHECK(back.surv_rows[i].event == data.surv_rows[i].event);
    CHECK(back.surv_rows[i].z == data.surv_rows[i].z);
  }
  CHECK(back.x_names == data.x_names);
  CHECK(back.z_names == data.z_names);
}

TEST_CASE("association weights") {
  using model::Association;
  CHECK(model::association_weights(Association::IntSlopeShared, {2.0}, 3.0) == std::pair{2.0, 6.0});
  CHECK(model::association_weights(Association::InterceptOnly, {1.5}, 7.0) == std::pair{1.5, 0.0});
  CHECK(model::association_weights(Association::SlopeOnly, {1.5}, 2.0) == std::pair{0.0, 3.0});
  CHECK(model::association_weights(Association::IntSlopeSeparate, {1.0, 0.5}, 4.0) == std::pair{1.0, 2.0});
  CHECK(error_code([] { model::association_weights(Association::IntSlopeSeparate, {1.0}, 1.0); }) ==
        ErrorCode::WrongNuArity);
  CHECK(error_code([] { model::association_weights(Association::IntSlopeShared, {1.0, 2.0}, 1.0); }) ==
        ErrorCode::WrongNuArity);
  CHECK(model::parse_association("eq7") == Association::IntSlopeSeparate);
  CHECK(model::association_key(Association::SlopeOnly) == "eq5");
  CHECK(error_code([] { model::parse_association("eq8"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("spline interpolation") {
  model::ModelConfig cfg;
  cfg.spline.knots = {0.0, 1.0, 2.5, 3.0};
  model::StackedDesign s(three_subjects(), cfg);
  CHECK(s.interpolate(1.0) == std::pair{1, 1.0});
  CHECK(s.interpolate(0.0) == std::pair{0, 1.0});
  const auto [j, w] = s.interpolate(3.0);
  CHECK(j == 2);
  CHECK(w == doctest::Approx(0.0));
  const auto mid = s.interpolate(2.0);
  CHECK(mid.first == 1);
  CHECK(mid.second == doctest::Approx(1.0 / 3.0));
  CHECK(error_code([&] { s.interpolate(3.5); }) == ErrorCode::TimeOutsideKnotRange);
  CHECK(error_code([&] { s.interpolate(-0.1); }) == ErrorCode::TimeOutsideKnotRange);
}

TEST_CASE("mapping reproduces hand-assembled predictors") {
  const auto data = three_subjects();
  for (auto assoc : {model::Association::InterceptOnly, model::Association::SlopeOnly,
                     model::Association::IntSlopeShared, model::Association::IntSlopeSeparate}) {
    model::ModelConfig cfg;
    cfg.association = assoc;
    cfg.spline.knots = {0.0, 0.8, 2.0, 3.0};
    cfg.frailty = true;
    model::StackedDesign s(data, cfg);
    model::HyperParams p;
    p.nu1 = 0.7;
    p.nu2 = -0.4;
    const Eigen::MatrixXd a = Eigen::MatrixXd(model::build_mapping(s, p));
    const auto& lay = s.layout();
    REQUIRE(a.rows() == 9);
    REQUIRE(a.cols() == lay.eta_begin());

    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(a.cols());
    for (int i = 0; i < x.size(); ++i) x[i] = nd(rng);
    const Eigen::VectorXd eta = a * x;

    const auto at = [&](model::Block b, int k) { return x[lay[b].offset + k]; };
    const std::vector<double> nu = nu_arity(assoc) == 2 ? std::vector<double>{0.7, -0.4} : std::vector<double>{0.7};
    for (int r = 0; r < 6; ++r) {
      const auto& row = data.long_rows[static_cast<std::size_t>(r)];
      const auto [j, wl] = bracket(cfg.spline.knots, row.time);
      const int i = row.subject - 1;
      const double hand = wl * at(model::Block::Alpha, j) + (1 - wl) * at(model::Block::Alpha, j + 1) +
                          row.x[0] * at(model::Block::Beta, 0) + at(model::Block::W, i) +
                          row.time * at(model::Block::V, i);
      CHECK(std::abs(eta[r] - hand) < 1e-12);
    }
    for (int l = 0; l < 3; ++l) {
      const auto& row = data.surv_rows[static_cast<std::size_t>(l)];
      const auto [ww, wv] = model::association_weights(assoc, nu, row.time);
      const double hand = at(model::Block::Gamma, 0) + row.z[0] * at(model::Block::Gamma, 1) +
                          ww * at(model::Block::W, l) + wv * at(model::Block::V, l) + at(model::Block::M, l);
      CHECK(std::abs(eta[6 + l] - hand) < 1e-12);
    }
  }
}

TEST_CASE("zero association decouples the submodels") {
  model::ModelConfig cfg;
  cfg.spline.n_knots = 4;
  model::StackedDesign s(three_subjects(), cfg);
  model::HyperParams p;
  p.nu1 = 0.0;
  const Eigen::MatrixXd a = Eigen::MatrixXd(model::build_mapping(s, p));
  const auto& lay = s.layout();
  for (int r = 6; r < 9; ++r) {
    for (auto b : {model::Block::W, model::Block::V}) {
      for (int k = 0; k < lay[b].length; ++k) CHECK(a(r, lay[b].offset + k) == 0.0);
    }
  }
}

TEST_CASE("conjugate joint density") {
  lgm::LatentGaussianModel m;
  gmrf::SparseSymMatrix q(1);
  q.add(0, 0, 1.0);
  m.prior_lower = q.lower();
  m.log_det_prior = 0.0;
  gmrf::SparseMatrix a(1, 1);
  a.insert(0, 0) = 1.0;
  m.mapping = a;
  m.observations = {{lgm::Family::Gaussian, 2.0}};
  m.tau_eps = 1.0;
  const double log2pi = std::log(2 * std::numbers::pi);
  for (double x : {-1.0, 0.0, 1.0, 2.5}) {
    Eigen::VectorXd v(1);
    v << x;
    // Bivariate Gaussian (x, y) with covariance [[1, 1], [1, 2]].
    Eigen::Matrix2d cov;
    cov << 1, 1, 1, 2;
    const Eigen::Vector2d z(x, 2.0);
    const double closed = -log2pi - 0.5 * std::log(cov.determinant()) - 0.5 * z.dot(cov.inverse() * z);
    CHECK(m.log_joint(v) == doctest::Approx(closed).epsilon(1e-13));
  }
}

TEST_CASE("joint model density parts") {
  sim::Scenario sc;
  sc.n_subjects = 30;
  sc.seed = 3;
  const auto s = sim::simulate_joint(sc);
  model::ModelConfig cfg;
  cfg.association = model::Association::InterceptOnly;
  cfg.random_effects = model::RandomEffects::Intercept;
  cfg.spline.n_knots = 8;
  auto design = std::make_shared<const model::StackedDesign>(s.data, cfg);
  model::JointModel jm(design, model::PredictorLink::Exact);

  model::HyperParams truth;
  truth.tau_eps = sc.tau_eps;
  truth.kappa = sc.kappa;
  truth.tau_w = 1 / (sc.sigma_w * sc.sigma_w);
  truth.nu1 = sc.nu[0];
  const Eigen::VectorXd theta = jm.space().to_internal(truth);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(jm.latent_dim());
  const auto& lay = design->layout();
  for (int k = 0; k < lay[model::Block::Alpha].length; ++k) {
    const double t = design->knots()[static_cast<std::size_t>(k)];
    x[lay[model::Block::Alpha].offset + k] = t * t;
  }
  for (const auto& sub : s.subjects) x[lay[model::Block::W].offset + design->subject_index(sub.id)] = sub.w;
  const auto parts = model::joint_logdensity_parts(x, theta, jm);
  CHECK(std::isfinite(parts.log_prior_latent));
  CHECK(std::isfinite(parts.log_likelihood));
  CHECK(std::isfinite(parts.log_prior_theta));

  // Likelihood part against a direct per-row sum.
  const Eigen::VectorXd eta = Eigen::MatrixXd(model::build_mapping(*design, truth)) * x;
  double direct = 0;
  for (int r = 0; r < design->n_long(); ++r) {
    direct += lik::gaussian_loglik({design->rows()[static_cast<std::size_t>(r)].y, eta[r], truth.tau_eps});
  }
  for (int l = 0; l < design->n_surv(); ++l) {
    const auto& row = design->rows()[static_cast<std::size_t>(design->n_long() + l)];
    direct += lik::weibull_loglik({row.time, row.event, eta[design->n_long() + l], truth.kappa});
  }
  CHECK(parts.log_likelihood == doctest::Approx(direct).epsilon(1e-12));

  // Latent prior part against a dense Gaussian density.
  const auto rest = model::rest_prior(*design, truth);
  const Eigen::MatrixXd qd = rest.precision.dense().topLeftCorner(x.size(), x.size());
  const double logdet = 2 * Eigen::MatrixXd(Eigen::LLT<Eigen::MatrixXd>(qd).matrixL()).diagonal().array().log().sum();
  CHECK(rest.log_det == doctest::Approx(logdet).epsilon(1e-10));
  const double dense = 0.5 * logdet - 0.5 * x.size() * std::log(2 * std::numbers::pi) - 0.5 * x.dot(qd * x);
  CHECK(parts.log_prior_latent == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("hyperparameter domain is enforced") {
  model::ModelConfig cfg;
  cfg.spline.n_knots = 4;
  auto design = std::make_shared<const model::StackedDesign>(three_subjects(), cfg);
  model::JointModel jm(design);
  model::HyperParams p;
  p.rho = 1.0;
  CHECK(error_code([&] { jm.instance(p); }).has_value());
  CHECK(error_code([&] { jm.space().check_domain(p); }) == ErrorCode::InvalidRho);
  const auto names = jm.space().active_names();
  CHECK(names == std::vector<std::string>{"tau_eps", "kappa", "tau_alpha", "tau_w", "tau_v", "rho", "nu"});
}

TEST_CASE("survival rows must match longitudinal subjects") {
  model::ModelConfig cfg;
  cfg.spline.n_knots = 4;
  auto orphan = three_subjects();
  orphan.surv_rows.push_back({9, 1.0, 1, {0.0}});
  CHECK(error_code([&] { model::StackedDesign s(orphan, cfg); }) == ErrorCode::OrphanSurvivalRow);
  auto missing = three_subjects();
  missing.surv_rows.pop_back();
  CHECK(error_code([&] { model::StackedDesign s(missing, cfg); }) == ErrorCode::OrphanSurvivalRow);
  auto dup = three_subjects();
  dup.surv_rows.push_back(dup.surv_rows.front());
  CHECK(error_code([&] { model::StackedDesign s(dup, cfg); }) == ErrorCode::DuplicateSurvivalRow);
  CHECK(error_code([&] { model::StackedDesign s(model::JointData{}, cfg); }) == ErrorCode::EmptyData);
}

TEST_CASE("latent layout covers every block once") {
  model::ModelConfig cfg;
  cfg.spline.n_knots = 5;
  cfg.frailty = true;
  model::StackedDesign s(three_subjects(), cfg);
  const auto& lay = s.layout();
  int next = 0;
  for (const auto& b : lay.blocks()) {
    CHECK(b.offset == next);
    next += b.length;
  }
  CHECK(next == lay.dim());
  CHECK(lay[model::Block::Alpha].length == 5);
  CHECK(lay[model::Block::W].length == 3);
  CHECK(lay[model::Block::M].length == 3);
  CHECK(lay[model::Block::EtaL].length == 6);
  CHECK(lay[model::Block::EtaS].length == 3);
}
