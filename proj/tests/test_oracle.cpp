#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "jmlgm/oracle.hpp"
#include "jmlgm/simulate.hpp"
#include "support.hpp"

using namespace jmlgm;
using jmlgm::testing::error_code;

namespace {

// x ~ N(0, 1), y = 2 ~ N(x, 1); optional theta = log tau_eps with a Gaussian prior.
class Toy : public lgm::HyperModel {
 public:
  explicit Toy(bool with_theta = false, int dim = 1) : with_theta_(with_theta), dim_(dim) {}
  int theta_dim() const override { return with_theta_ ? 1 : 0; }
  std::vector<std::string> theta_names() const override {
    return with_theta_ ? std::vector<std::string>{"tau_eps"} : std::vector<std::string>{};
  }
  std::vector<priors::HyperTransform> theta_transforms() const override {
    return priors::transform_registry(theta_names());
  }
  Eigen::VectorXd theta_start() const override { return Eigen::VectorXd::Zero(theta_dim()); }
  double log_prior_theta(const Eigen::VectorXd& t) const override {
    return with_theta_ ? priors::gaussian_logprior(t[0], 0.0, 1.0) : 0.0;
  }
  int latent_dim() const override { return dim_; }
  lgm::LatentGaussianModel instance(const Eigen::VectorXd& t) const override {
    lgm::LatentGaussianModel m;
    gmrf::SparseSymMatrix q(1);
    q.add(0, 0, 1.0);
    m.prior_lower = q.lower();
    gmrf::SparseMatrix a(1, 1);
    a.insert(0, 0) = 1.0;
    m.mapping = a;
    m.observations = {{lgm::Family::Gaussian, 2.0}};
    m.tau_eps = with_theta_ ? std::exp(t[0]) : 1.0;
    return m;
  }

 private:
  bool with_theta_;
  int dim_;
};

// No data and no latent field: only the PC prior on a precision.
class PriorOnly : public lgm::HyperModel {
 public:
  int theta_dim() const override { return 1; }
  std::vector<std::string> theta_names() const override { return {"tau_alpha"}; }
  std::vector<priors::HyperTransform> theta_transforms() const override { return {priors::transform_for("tau_alpha")}; }
  Eigen::VectorXd theta_start() const override { return Eigen::VectorXd::Zero(1); }
  double log_prior_theta(const Eigen::VectorXd& t) const override {
    return priors::log_prior_internal(priors::PriorSpec::pc_precision(1.0, 0.01), priors::transform_for("tau_alpha"), t[0]);
  }
  int latent_dim() const override { return 0; }
  lgm::LatentGaussianModel instance(const Eigen::VectorXd&) const override {
    lgm::LatentGaussianModel m;
    m.prior_lower = gmrf::SparseMatrix(0, 0);
    m.mapping = gmrf::SparseMatrix(0, 0);
    return m;
  }
};

class Broken : public Toy {
 public:
  double log_prior_theta(const Eigen::VectorXd&) const override { return -std::numeric_limits<double>::infinity(); }
  Broken() : Toy(true) {}
};

oracle::McmcConfig short_config(std::uint64_t seed = 1) {
  oracle::McmcConfig c;
  c.iterations = 40000;
  c.burn_in = 10000;
  c.thinning = 5;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("conjugate toy") {
  Toy toy;
  const auto r = oracle::run_mcmc(toy, {{"x", 0, 1}}, short_config(), {"x"}, {0});
  REQUIRE(r.latent.size() == 1);
  const auto& x = r.latent[0];
  CHECK(std::abs(x.mean - 1.0) < 3 * x.mcse);
  CHECK(std::abs(x.sd - std::sqrt(0.5)) < 0.05);
  CHECK(r.acceptance[0] > 0.1);
  CHECK(r.acceptance[0] < 0.6);
  CHECK(r.latent_samples.rows() == (40000 - 10000) / 5);
}

TEST_CASE("toy with a hyperparameter uses the joint move") {
  Toy toy(true);
  const auto r = oracle::run_mcmc(toy, {{"x", 0, 1}}, short_config(3), {"x"}, {0});
  REQUIRE(r.block_names.size() == 3);
  CHECK(r.block_names.back() == "theta+x");
  for (double a : r.acceptance) {
    CHECK(a > 0.05);
    CHECK(a < 0.95);
  }
  CHECK(r.theta_internal.size() == 1);
  CHECK(r.theta_user.front().mean > 0.0);
}

TEST_CASE("PC prior only target reproduces the tail probability") {
  PriorOnly m;
  auto cfg = short_config(5);
  cfg.iterations = 120000;
  cfg.burn_in = 20000;
  const auto r = oracle::run_mcmc(m, {}, cfg);
  Eigen::VectorXd below(r.theta_samples.rows());
  for (Eigen::Index i = 0; i < below.size(); ++i) below[i] = r.theta_samples(i, 0) < 0.0 ? 1.0 : 0.0;
  const auto s = oracle::summarize_chain("P(sigma>1)", below);
  CHECK(std::abs(s.mean - 0.01) < 3 * s.mcse);
  CHECK(s.mcse > 0.0);
}

TEST_CASE("effective sample size") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Eigen::VectorXd iid(20000), ar(20000);
  double prev = 0;
  for (int i = 0; i < 20000; ++i) {
    iid[i] = nd(rng);
    prev = 0.9 * prev + nd(rng);
    ar[i] = prev;
  }
  CHECK(oracle::effective_sample_size(iid) == doctest::Approx(20000).epsilon(0.15));
  // AR(1) with phi = 0.9: ESS = n (1 - phi) / (1 + phi).
  CHECK(oracle::effective_sample_size(ar) == doctest::Approx(20000 * 0.1 / 1.9).epsilon(0.25));
  const auto s = oracle::summarize_chain("ar", ar);
  CHECK(s.mcse == doctest::Approx(s.sd / std::sqrt(s.ess)));
}

TEST_CASE("sampler is deterministic under a seed") {
  Toy toy(true);
  const auto a = oracle::run_mcmc(toy, {{"x", 0, 1}}, short_config(7), {"x"}, {0});
  const auto b = oracle::run_mcmc(toy, {{"x", 0, 1}}, short_config(7), {"x"}, {0});
  CHECK(a.latent[0].mean == b.latent[0].mean);
  CHECK(a.theta_internal[0].mean == b.theta_internal[0].mean);
  CHECK(a.theta_samples == b.theta_samples);
  const auto c = oracle::run_mcmc(toy, {{"x", 0, 1}}, short_config(8), {"x"}, {0});
  CHECK(c.latent[0].mean != a.latent[0].mean);
}

TEST_CASE("sampler guards") {
  Toy huge(false, oracle::kMaxLatentDim + 1);
  CHECK(error_code([&] { oracle::run_mcmc(huge, {}, short_config()); }) == ErrorCode::DimensionTooLarge);
  Broken broken;
  CHECK(error_code([&] { oracle::run_mcmc(broken, {{"x", 0, 1}}, short_config()); }) == ErrorCode::DegenerateTarget);

  auto bad = short_config();
  bad.burn_in = bad.iterations;
  CHECK(error_code([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  bad = short_config();
  bad.scales = {1.0, 2.0, 3.0};
  Toy toy;
  CHECK(error_code([&] { oracle::run_mcmc(toy, {{"x", 0, 1}}, bad); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("joint-model sampler on a small instance") {
  sim::Scenario sc;
  sc.n_subjects = 8;
  sc.seed = 2;
  const auto s = sim::simulate_joint(sc);
  model::ModelConfig cfg;
  cfg.association = model::Association::InterceptOnly;
  cfg.random_effects = model::RandomEffects::Intercept;
  cfg.spline.n_knots = 5;
  auto design = std::make_shared<const model::StackedDesign>(s.data, cfg);
  auto mc = short_config();
  mc.iterations = 4000;
  mc.burn_in = 1000;
  const auto r = oracle::run_mcmc(design, mc);
  CHECK(r.theta_user.size() == 5);
  CHECK(r.find(r.latent, "w[1]").name == "w[1]");
  for (const auto& p : r.latent) CHECK(std::isfinite(p.mean));
}
