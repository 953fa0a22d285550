#pragma once

// Observation log-likelihoods as functions of a single linear predictor.

namespace jmlgm::lik {

/// Gaussian longitudinal observation.
struct LongObs {
  double y;
  double eta;
  double tau_eps;
};

/// Right-censored Weibull survival observation; event == 1 means the event
/// was observed, event == 0 means censored at `s`.
struct SurvObs {
  double s;
  int event;
  double eta;
  double kappa;
};

struct Derivatives {
  double gradient;
  double curvature;
};

double gaussian_loglik(const LongObs& obs);

/// c [log k + (k-1) log s + eta] - s^k e^eta. The predictor is held constant
/// over [0, s] when forming the cumulative hazard.
double weibull_loglik(const SurvObs& obs);

Derivatives loglik_grad_hess(const LongObs& obs);
Derivatives loglik_grad_hess(const SurvObs& obs);

/// Cumulative hazard s^k e^eta.
double weibull_cumulative_hazard(double s, double eta, double kappa);

// Unchecked kernels for the inner loops; callers validate once up front.
namespace detail {
inline double gaussian(double y, double eta, double tau, double half_log_tau_over_2pi) {
  const double r = y - eta;
  return half_log_tau_over_2pi - 0.5 * tau * r * r;
}
}  // namespace detail

}  // namespace jmlgm::lik
