#include "doctest.h"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "jmlgm/likelihoods.hpp"
#include "support.hpp"

using namespace jmlgm;
using jmlgm::testing::error_code;

TEST_CASE("Gaussian log-likelihood values") {
  CHECK(lik::gaussian_loglik({0.0, 0.0, 1.0}) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  CHECK(lik::gaussian_loglik({2.0, 2.0, 5.0}) == doctest::Approx(0.5 * std::log(5.0 / (2 * std::numbers::pi))));

  // Normalize exp(-tau r^2 / 2) numerically and compare.
  const double tau = 2.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double z = ts.integrate([&](double y) { return std::exp(-0.5 * tau * y * y); },
                                -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
  CHECK(std::abs(lik::gaussian_loglik({1.0, 0.0, tau}) - (-0.5 * tau - std::log(z))) < 1e-10);
}

TEST_CASE("Weibull log-likelihood values") {
  CHECK(lik::weibull_loglik({1.0, 1, 0.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(lik::weibull_loglik({2.0, 0, 0.0, 2.0}) == doctest::Approx(-4.0).epsilon(1e-14));
  const double hand = std::log(2.0) + std::log(2.0) + 0.5 - 4 * std::exp(0.5);
  CHECK(lik::weibull_loglik({2.0, 1, 0.5, 2.0}) == doctest::Approx(hand).epsilon(1e-14));
  CHECK(hand == doctest::Approx(-4.708591).epsilon(1e-6));
  CHECK(lik::weibull_cumulative_hazard(2.0, 0.5, 2.0) == doctest::Approx(4 * std::exp(0.5)));
}

TEST_CASE("derivatives in closed form") {
  const auto g = lik::loglik_grad_hess(lik::LongObs{1.0, 0.0, 2.0});
  CHECK(g.gradient == doctest::Approx(2.0));
  CHECK(g.curvature == doctest::Approx(-2.0));
  const auto w = lik::loglik_grad_hess(lik::SurvObs{1.0, 1, 0.0, 1.0});
  CHECK(w.gradient == doctest::Approx(0.0));
  CHECK(w.curvature == doctest::Approx(-1.0));
}

TEST_CASE("derivatives match central differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-5;
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
  for (int k = 0; k < 200; ++k) {
    const double eta = -3 + 6 * u(rng);
    const double tau = 0.2 + 20 * u(rng);
    const double y = -2 + 4 * u(rng);
    const auto d = lik::loglik_grad_hess(lik::LongObs{y, eta, tau});
    const auto f = [&](double e) { return lik::gaussian_loglik({y, e, tau}); };
    const auto df = [&](double e) { return lik::loglik_grad_hess(lik::LongObs{y, e, tau}).gradient; };
    CHECK(rel(d.gradient, (f(eta + h) - f(eta - h)) / (2 * h)) < 1e-6);
    CHECK(rel(d.curvature, (df(eta + h) - df(eta - h)) / (2 * h)) < 1e-6);

    const double s = 0.05 + 4 * u(rng);
    const double kappa = 0.3 + 2.5 * u(rng);
    const int c = k % 2;
    const auto ws = lik::loglik_grad_hess(lik::SurvObs{s, c, eta, kappa});
    const auto g = [&](double e) { return lik::weibull_loglik({s, c, e, kappa}); };
    const auto dg = [&](double e) { return lik::loglik_grad_hess(lik::SurvObs{s, c, e, kappa}).gradient; };
    CHECK(rel(ws.gradient, (g(eta + h) - g(eta - h)) / (2 * h)) < 1e-6);
    CHECK(rel(ws.curvature, (dg(eta + h) - dg(eta - h)) / (2 * h)) < 1e-6);
    CHECK(ws.curvature < 0.0);
  }
}

TEST_CASE("unit shape is the exponential model") {
  for (double s : {0.1, 1.0, 3.7}) {
    for (double eta : {-1.0, 0.0, 0.8}) {
      const double rate = std::exp(eta);
      CHECK(lik::weibull_loglik({s, 1, eta, 1.0}) == doctest::Approx(std::log(rate) - rate * s).epsilon(1e-14));
      CHECK(lik::weibull_loglik({s, 0, eta, 1.0}) == doctest::Approx(-rate * s).epsilon(1e-14));
    }
  }
}

TEST_CASE("Weibull density integrates to one and censoring is its survival function") {
  const double eta = 0.3, kappa = 1.7;
  boost::math::quadrature::tanh_sinh<double> ts;
  const auto dens = [&](double s) { return std::exp(lik::weibull_loglik({s, 1, eta, kappa})); };
  CHECK(ts.integrate(dens, 0.0, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0).epsilon(1e-9));
  const double s0 = 1.3;
  CHECK(ts.integrate(dens, s0, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(std::exp(lik::weibull_loglik({s0, 0, eta, kappa}))).epsilon(1e-9));
}

TEST_CASE("likelihood input errors") {
  CHECK(error_code([] { lik::weibull_loglik({0.0, 1, 0.0, 1.0}); }) == ErrorCode::NonPositiveTime);
  CHECK(error_code([] { lik::weibull_loglik({1.0, 1, 0.0, 0.0}); }) == ErrorCode::NonPositiveShape);
  CHECK(error_code([] { lik::gaussian_loglik({1.0, 0.0, 0.0}); }) == ErrorCode::NonPositivePrecision);
}
