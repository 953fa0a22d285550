#include "doctest.h"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "jmlgm/priors.hpp"
#include "support.hpp"

using namespace jmlgm;
using jmlgm::testing::error_code;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("PC precision prior values") {
  const priors::PcPrecisionPrior pc{1.0, 0.01};
  CHECK(pc.lambda() == doctest::Approx(4.605170185988091));
  const double lambda = -std::log(0.01);
  CHECK(priors::pc_precision_logdensity(1.0, pc) == doctest::Approx(std::log(lambda / 2 * std::exp(-lambda))));
  CHECK(priors::pc_precision_logdensity(1.0, pc) == doctest::Approx(-3.7711377).epsilon(1e-7));
  CHECK(error_code([&] { priors::pc_precision_logdensity(0.0, pc); }) == ErrorCode::NonPositiveTau);
}

TEST_CASE("PC precision prior normalization and tail") {
  for (auto pc : {priors::PcPrecisionPrior{1.0, 0.01}, priors::PcPrecisionPrior{0.3, 0.05}}) {
    const auto dens = [&](double tau) { return std::exp(priors::pc_precision_logdensity(tau, pc)); };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const double cut = 1 / (pc.u * pc.u);
    const double head = ts.integrate(dens, 0.0, cut);
    const double tail = es.integrate(dens, cut, kInf);
    CHECK(std::abs(head + tail - 1.0) < 1e-6);
    CHECK(std::abs(head - pc.alpha) < 1e-6);
  }
}

TEST_CASE("Gaussian prior") {
  CHECK(priors::gaussian_logprior(0.0, 0.0, 1.0) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  const double direct = 0.5 * std::log(0.001) - 0.5 * std::log(2 * M_PI) - 0.5 * 0.001 * 4.0;
  CHECK(std::abs(priors::gaussian_logprior(2.0, 0.0, 0.001) - direct) < 1e-12);
  for (double x : {-0.5, 0.9, 2.0}) CHECK(priors::gaussian_logprior(x, 0.7, 3.0) < priors::gaussian_logprior(0.7, 0.7, 3.0));
  CHECK(error_code([] { priors::gaussian_logprior(0.0, 0.0, -1.0); }) == ErrorCode::NonPositivePrecision);
}

TEST_CASE("transforms") {
  const auto rho = priors::transform_for("rho");
  CHECK(rho.kind == priors::TransformKind::FisherZ);
  CHECK(rho.forward(0.0) == 0.0);
  CHECK(rho.backward(0.0) == 0.0);
  CHECK(rho.forward(0.5) == doctest::Approx(std::log(3.0)));

  const auto tau = priors::transform_for("tau_eps");
  CHECK(tau.forward(std::exp(3.0)) == doctest::Approx(3.0));
  CHECK(tau.log_jacobian(3.0) == doctest::Approx(3.0));
  CHECK(priors::transform_for("kappa").kind == priors::TransformKind::Log);
  CHECK(priors::transform_for("nu").kind == priors::TransformKind::Identity);
  CHECK(error_code([] { priors::transform_for("sigma"); }) == ErrorCode::UnknownHyperparameter);
  CHECK(error_code([] { priors::transform_registry({"tau_w", "bogus"}); }) == ErrorCode::UnknownHyperparameter);
  CHECK(error_code([&] { rho.forward(1.0); }) == ErrorCode::InvalidRho);
  CHECK(error_code([&] { tau.forward(-1.0); }) == ErrorCode::DomainError);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    for (const char* name : {"tau_w", "rho", "nu", "kappa"}) {
      const auto t = priors::transform_for(name);
      const double z = u(rng);
      const double user = t.backward(z);
      if (t.kind == priors::TransformKind::FisherZ && std::abs(user) > 0.999) continue;
      worst = std::max(worst, std::abs(t.backward(t.forward(user)) - user));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("prior mass is preserved by the change of variables") {
  boost::math::quadrature::tanh_sinh<double> ts;
  const auto pc = priors::PriorSpec::pc_precision(1.0, 0.01);
  const auto t = priors::transform_for("tau_alpha");
  // P(0.5 < tau < 20) on the user scale and on the internal scale.
  const auto user = [&](double tau) { return std::exp(priors::pc_precision_logdensity(tau, pc.pc)); };
  const auto internal = [&](double z) { return std::exp(priors::log_prior_internal(pc, t, z)); };
  const double a = ts.integrate(user, 0.5, 20.0);
  const double b = ts.integrate(internal, std::log(0.5), std::log(20.0));
  CHECK(std::abs(a - b) < 1e-6);
  CHECK(ts.integrate(internal, -60.0, 60.0) == doctest::Approx(1.0).epsilon(1e-6));

  const auto r = priors::transform_for("rho");
  const auto g = priors::PriorSpec::gaussian(0.0, 0.15);
  const auto on_rho = [&](double rho) {
    const double z = r.forward(rho);
    return std::exp(priors::log_prior_internal(g, r, z) - r.log_jacobian(z));
  };
  CHECK(ts.integrate(on_rho, -1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("prior modes and defaults") {
  const auto t = priors::transform_for("tau_w");
  const auto pc = priors::PriorSpec::pc_precision(1.0, 0.01);
  const double m = priors::prior_internal_mode(pc, t);
  const double h = 1e-4;
  CHECK(priors::log_prior_internal(pc, t, m) > priors::log_prior_internal(pc, t, m + h));
  CHECK(priors::log_prior_internal(pc, t, m) > priors::log_prior_internal(pc, t, m - h));
  CHECK(priors::default_prior("tau_eps").type == priors::PriorSpec::Type::PcPrecision);
  CHECK(priors::is_precision("tau_m"));
  CHECK_FALSE(priors::is_precision("rho"));
  CHECK(error_code([] { priors::log_prior_internal(priors::PriorSpec::pc_precision(1.0, 0.01),
                                                   priors::transform_for("rho"), 0.0); }) == ErrorCode::InvalidConfig);
}
