#include "jmlgm/likelihoods.hpp"

#include <cmath>
#include <numbers>

#include "jmlgm/errors.hpp"

namespace jmlgm::lik {

namespace {

void check(const LongObs& obs) {
  if (!(obs.tau_eps > 0.0)) throw Error(ErrorCode::NonPositivePrecision, "tau_eps must be > 0");
}

void check(const SurvObs& obs) {
  if (!(obs.s > 0.0)) throw Error(ErrorCode::NonPositiveTime, "survival time must be > 0");
  if (!(obs.kappa > 0.0)) throw Error(ErrorCode::NonPositiveShape, "Weibull shape must be > 0");
  if (obs.event != 0 && obs.event != 1) throw Error(ErrorCode::DomainError, "event must be 0 or 1");
}

}  // namespace

double gaussian_loglik(const LongObs& obs) {
  check(obs);
  return detail::gaussian(obs.y, obs.eta, obs.tau_eps,
                          0.5 * std::log(obs.tau_eps / (2.0 * std::numbers::pi)));
}

double weibull_cumulative_hazard(double s, double eta, double kappa) {
  return std::exp(kappa * std::log(s) + eta);
}

double weibull_loglik(const SurvObs& obs) {
  check(obs);
  const double log_s = std::log(obs.s);
  const double cum = std::exp(obs.kappa * log_s + obs.eta);
  double value = -cum;
  if (obs.event == 1) value += std::log(obs.kappa) + (obs.kappa - 1.0) * log_s + obs.eta;
  return value;
}

Derivatives loglik_grad_hess(const LongObs& obs) {
  check(obs);
  return {obs.tau_eps * (obs.y - obs.eta), -obs.tau_eps};
}

Derivatives loglik_grad_hess(const SurvObs& obs) {
  check(obs);
  const double cum = std::exp(obs.kappa * std::log(obs.s) + obs.eta);
  return {static_cast<double>(obs.event) - cum, -cum};
}

}  // namespace jmlgm::lik
