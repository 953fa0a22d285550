#include "jmlgm/priors.hpp"

#include <cmath>
#include <numbers>

#include "jmlgm/errors.hpp"

namespace jmlgm::priors {

double PcPrecisionPrior::lambda() const {
  if (!(u > 0.0)) throw Error(ErrorCode::InvalidConfig, "PC prior threshold u must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidConfig, "PC prior alpha must lie in (0, 1)");
  return -std::log(alpha) / u;
}

double pc_precision_logdensity(double tau, const PcPrecisionPrior& prior) {
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveTau, "precision must be > 0");
  const double lambda = prior.lambda();
  return std::log(0.5 * lambda) - 1.5 * std::log(tau) - lambda / std::sqrt(tau);
}

double gaussian_logprior(double x, double mean, double precision) {
  if (!(precision > 0.0)) throw Error(ErrorCode::NonPositivePrecision, "prior precision must be > 0");
  const double r = x - mean;
  return 0.5 * std::log(precision / (2.0 * std::numbers::pi)) - 0.5 * precision * r * r;
}

double HyperTransform::forward(double user) const {
  switch (kind) {
    case TransformKind::Log:
      if (!(user > 0.0)) throw Error(ErrorCode::DomainError, name + " must be > 0");
      return std::log(user);
    case TransformKind::FisherZ:
      if (!(std::abs(user) < 1.0)) throw Error(ErrorCode::InvalidRho, name + " must lie in (-1, 1)");
      return std::log((1.0 + user) / (1.0 - user));
    case TransformKind::Identity:
      return user;
  }
  return user;
}

double HyperTransform::backward(double internal) const {
  switch (kind) {
    case TransformKind::Log: return std::exp(internal);
    // 2/(1+e^-z) - 1 written to stay accurate for large |z|.
    case TransformKind::FisherZ: return std::tanh(0.5 * internal);
    case TransformKind::Identity: return internal;
  }
  return internal;
}

double HyperTransform::log_jacobian(double internal) const {
  switch (kind) {
    case TransformKind::Log: return internal;
    case TransformKind::FisherZ: {
      // d rho / dz = (1 - rho^2) / 2
      const double rho = std::tanh(0.5 * internal);
      return std::log(0.5 * (1.0 - rho) * (1.0 + rho));
    }
    case TransformKind::Identity: return 0.0;
  }
  return 0.0;
}

bool is_precision(std::string_view name) {
  return name == "tau_eps" || name == "tau_alpha" || name == "tau_w" || name == "tau_v" ||
         name == "tau_m";
}

HyperTransform transform_for(std::string_view name) {
  if (is_precision(name) || name == "kappa") return {std::string(name), TransformKind::Log};
  if (name == "rho") return {std::string(name), TransformKind::FisherZ};
  if (name == "nu" || name == "nu1" || name == "nu2") return {std::string(name), TransformKind::Identity};
  throw Error(ErrorCode::UnknownHyperparameter, std::string(name));
}

std::vector<HyperTransform> transform_registry(const std::vector<std::string>& names) {
  std::vector<HyperTransform> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(transform_for(n));
  return out;
}

PriorSpec PriorSpec::pc_precision(double u, double alpha) {
  PriorSpec s;
  s.type = Type::PcPrecision;
  s.pc = {u, alpha};
  s.pc.lambda();
  return s;
}

PriorSpec PriorSpec::gaussian(double mean, double precision) {
  if (!(precision > 0.0)) throw Error(ErrorCode::InvalidConfig, "Gaussian prior precision must be > 0");
  PriorSpec s;
  s.type = Type::Gaussian;
  s.mean = mean;
  s.precision = precision;
  return s;
}

PriorSpec PriorSpec::fixed(double value) {
  PriorSpec s;
  s.type = Type::Fixed;
  s.value = value;
  return s;
}

PriorSpec default_prior(std::string_view name) {
  if (is_precision(name)) return PriorSpec::pc_precision(1.0, 0.01);
  if (name == "rho") return PriorSpec::gaussian(0.0, 0.15);
  if (name == "kappa") return PriorSpec::gaussian(0.0, 0.01);
  if (name == "nu" || name == "nu1" || name == "nu2") return PriorSpec::gaussian(0.0, 0.001);
  throw Error(ErrorCode::UnknownHyperparameter, std::string(name));
}

double log_prior_internal(const PriorSpec& spec, const HyperTransform& transform, double internal) {
  switch (spec.type) {
    case PriorSpec::Type::PcPrecision:
      if (transform.kind != TransformKind::Log) {
        throw Error(ErrorCode::InvalidConfig, "pc_precision prior on non-precision " + transform.name);
      }
      return pc_precision_logdensity(std::exp(internal), spec.pc) + internal;
    case PriorSpec::Type::Gaussian:
      return gaussian_logprior(internal, spec.mean, spec.precision);
    case PriorSpec::Type::Fixed:
      return 0.0;
  }
  return 0.0;
}

double prior_internal_mode(const PriorSpec& spec, const HyperTransform& transform) {
  switch (spec.type) {
    case PriorSpec::Type::PcPrecision:
      // d/dtheta [-theta/2 - lambda e^{-theta/2}] = 0  =>  theta = 2 log lambda
      return 2.0 * std::log(spec.pc.lambda());
    case PriorSpec::Type::Gaussian:
      return spec.mean;
    case PriorSpec::Type::Fixed:
      return transform.forward(spec.value);
  }
  return 0.0;
}

}  // namespace jmlgm::priors
