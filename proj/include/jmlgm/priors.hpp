#pragma once

// Hyperparameter priors and the maps between the user scale and the
// unconstrained scale the optimizer works on.

#include <string>
#include <string_view>
#include <vector>

namespace jmlgm::priors {

/// Penalized-complexity prior on a precision tau: P(1/sqrt(tau) > u) = alpha.
/// The density is Gumbel type 2, (lambda/2) tau^{-3/2} exp(-lambda tau^{-1/2}).
struct PcPrecisionPrior {
  double u = 1.0;
  double alpha = 0.01;

  double lambda() const;
};

double pc_precision_logdensity(double tau, const PcPrecisionPrior& prior);
double gaussian_logprior(double x, double mean, double precision);

enum class TransformKind { Log, FisherZ, Identity };

/// Bijection user -> internal (forward) and back. `log_jacobian` is
/// log |d user / d internal| at an internal value, the term that must be
/// added to a user-scale log-density to express it on the internal scale.
struct HyperTransform {
  std::string name;
  TransformKind kind;

  double forward(double user) const;
  double backward(double internal) const;
  double log_jacobian(double internal) const;
};

/// Transform for a known hyperparameter name; throws UnknownHyperparameter.
HyperTransform transform_for(std::string_view name);
std::vector<HyperTransform> transform_registry(const std::vector<std::string>& names);

bool is_precision(std::string_view name);

/// Prior setting of one hyperparameter. `Gaussian` lives on the internal
/// scale (log tau, log kappa, Fisher-z of rho, nu as is); `PcPrecision` is
/// defined on the precision itself; `Fixed` removes the parameter from the
/// optimization and pins it at `value` (user scale).
struct PriorSpec {
  enum class Type { PcPrecision, Gaussian, Fixed };
  Type type = Type::Gaussian;
  PcPrecisionPrior pc{};
  double mean = 0.0;
  double precision = 0.001;
  double value = 0.0;

  static PriorSpec pc_precision(double u, double alpha);
  static PriorSpec gaussian(double mean, double precision);
  static PriorSpec fixed(double value);
};

PriorSpec default_prior(std::string_view name);

/// Log prior density of the internal coordinate, including the Jacobian for
/// priors stated on the user scale.
double log_prior_internal(const PriorSpec& spec, const HyperTransform& transform, double internal);

/// Mode of the prior on the internal scale (used as optimizer start).
double prior_internal_mode(const PriorSpec& spec, const HyperTransform& transform);

}  // namespace jmlgm::priors
