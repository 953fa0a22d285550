#pragma once

// A latent Gaussian model at fixed hyperparameters: latent x ~ N(0, Q^{-1}),
// linear predictors eta = A x (+ e), and one observation per predictor.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "jmlgm/gmrf.hpp"
#include "jmlgm/priors.hpp"

namespace jmlgm::lgm {

enum class Family { Gaussian, Weibull };

struct Observation {
  Family family;
  double response;  // y for Gaussian, observed time s for Weibull
  int event = 1;    // Weibull only
};

struct DensityParts {
  double log_prior_latent;  // log pi(x | theta)
  double log_likelihood;    // log pi(y | x, theta)
  double log_prior_theta;   // log pi(theta), internal scale

  double total() const { return log_prior_latent + log_likelihood + log_prior_theta; }
};

/// With `link_precision` k > 0 the predictors are latent too,
/// eta = A x + e with e ~ N(0, I / k), and the latent field is (x, eta).
/// With k = 0 the link is exact (eta = A x) and the latent field is x.
struct LatentGaussianModel {
  gmrf::SparseMatrix prior_lower;  // lower triangle of Q, every diagonal entry stored
  double log_det_prior = 0.0;      // log |Q|
  gmrf::SparseMatrix mapping;      // A, one row per observation
  std::vector<Observation> observations;
  double link_precision = 0.0;
  double tau_eps = 1.0;
  double kappa = 1.0;
  /// Optional fill-reducing permutation for the pattern of Q + A'A.
  const gmrf::Permutation* ordering = nullptr;

  int dim() const { return static_cast<int>(prior_lower.rows()); }
  int n_obs() const { return static_cast<int>(observations.size()); }
  bool has_link() const { return link_precision > 0.0; }
  /// Dimension of the full latent field: x, plus eta when the link is noisy.
  int full_dim() const { return dim() + (has_link() ? n_obs() : 0); }

  double log_likelihood(const Eigen::VectorXd& eta) const;
  /// First and second derivatives of each observation's log-likelihood with
  /// respect to its predictor.
  void likelihood_derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& gradient,
                              Eigen::VectorXd& curvature) const;
  double prior_quadratic(const Eigen::VectorXd& x) const;
  /// log pi(x) for the exact link, log pi(x, eta) for the noisy link.
  double log_prior_latent(const Eigen::VectorXd& x, const Eigen::VectorXd* eta = nullptr) const;
  /// Splits a full latent vector into (x, eta); eta = A x for the exact link.
  Eigen::VectorXd predictors(const Eigen::VectorXd& full) const;
  /// log pi(x, eta | theta) + log pi(y | eta) for a full latent vector.
  double log_joint(const Eigen::VectorXd& full) const;
};

/// A family of latent Gaussian models indexed by an unconstrained
/// hyperparameter vector. The inference engine only talks to this interface.
class HyperModel {
 public:
  virtual ~HyperModel() = default;

  virtual int theta_dim() const = 0;
  virtual std::vector<std::string> theta_names() const = 0;
  virtual std::vector<priors::HyperTransform> theta_transforms() const = 0;
  virtual Eigen::VectorXd theta_start() const = 0;
  /// log pi(theta) on the internal scale, Jacobians included.
  virtual double log_prior_theta(const Eigen::VectorXd& theta) const = 0;
  /// Throws jmlgm::Error when theta is outside the domain.
  virtual LatentGaussianModel instance(const Eigen::VectorXd& theta) const = 0;
  /// Dimension of the full latent field.
  virtual int latent_dim() const = 0;
};

}  // namespace jmlgm::lgm
