#include "jmlgm/lgm.hpp"

#include <cmath>
#include <numbers>

#include "jmlgm/likelihoods.hpp"

namespace jmlgm::lgm {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

double LatentGaussianModel::log_likelihood(const Eigen::VectorXd& eta) const {
  const double gauss_const = 0.5 * std::log(tau_eps / (2.0 * std::numbers::pi));
  const double log_kappa = std::log(kappa);
  double acc = 0.0;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const auto& o = observations[k];
    const double e = eta[static_cast<Eigen::Index>(k)];
    if (o.family == Family::Gaussian) {
      acc += lik::detail::gaussian(o.response, e, tau_eps, gauss_const);
    } else {
      const double log_s = std::log(o.response);
      acc -= std::exp(kappa * log_s + e);
      if (o.event == 1) acc += log_kappa + (kappa - 1.0) * log_s + e;
    }
  }
  return acc;
}

void LatentGaussianModel::likelihood_derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& gradient,
                                                 Eigen::VectorXd& curvature) const {
  const auto n = static_cast<Eigen::Index>(observations.size());
  gradient.resize(n);
  curvature.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& o = observations[static_cast<std::size_t>(k)];
    if (o.family == Family::Gaussian) {
      gradient[k] = tau_eps * (o.response - eta[k]);
      curvature[k] = -tau_eps;
    } else {
      const double cum = std::exp(kappa * std::log(o.response) + eta[k]);
      gradient[k] = static_cast<double>(o.event) - cum;
      curvature[k] = -cum;
    }
  }
}

double LatentGaussianModel::prior_quadratic(const Eigen::VectorXd& x) const {
  double acc = 0.0;
  for (int k = 0; k < prior_lower.outerSize(); ++k) {
    for (gmrf::SparseMatrix::InnerIterator it(prior_lower, k); it; ++it) {
      const double term = it.value() * x[it.row()] * x[it.col()];
      acc += (it.row() == it.col()) ? term : 2.0 * term;
    }
  }
  return acc;
}

double LatentGaussianModel::log_prior_latent(const Eigen::VectorXd& x, const Eigen::VectorXd* eta) const {
  double out = -0.5 * dim() * kLog2Pi + 0.5 * log_det_prior - 0.5 * prior_quadratic(x);
  if (has_link() && eta) {
    const Eigen::VectorXd r = *eta - mapping * x;
    out += 0.5 * n_obs() * std::log(link_precision / (2.0 * std::numbers::pi)) - 0.5 * link_precision * r.squaredNorm();
  }
  return out;
}

Eigen::VectorXd LatentGaussianModel::predictors(const Eigen::VectorXd& full) const {
  if (has_link()) return full.tail(n_obs());
  return mapping * full.head(dim());
}

double LatentGaussianModel::log_joint(const Eigen::VectorXd& full) const {
  const Eigen::VectorXd x = full.head(dim());
  const Eigen::VectorXd eta = predictors(full);
  return log_prior_latent(x, has_link() ? &eta : nullptr) + log_likelihood(eta);
}

}  // namespace jmlgm::lgm
