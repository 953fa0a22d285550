#pragma once

// Gaussian approximation of the latent conditional, Laplace approximation of
// the hyperparameter posterior, theta exploration and marginal summaries.

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "jmlgm/gmrf.hpp"
#include "jmlgm/lgm.hpp"
#include "jmlgm/model.hpp"

namespace jmlgm::inference {

struct NewtonOptions {
  double tolerance = 1e-8;  // sup-norm of the update
  int max_iterations = 50;
};

struct GaussianApprox {
  Eigen::VectorXd mode;  // full latent field (x, and eta for the augmented link)
  /// Q + A' D A at the mode: the precision of x under the approximation, with
  /// D the likelihood curvatures (for the augmented link, k c / (k + c)).
  std::shared_ptr<const gmrf::Factorization> precision_factor;
  double log_normalizer = 0.0;  // log pi_G(mode)
  double log_prior_latent = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;  // linear solves performed
  int steps = 0;       // solves whose update exceeded the tolerance
};

GaussianApprox gaussian_approximation(const lgm::LatentGaussianModel& model,
                                      const Eigen::VectorXd* start = nullptr,
                                      const NewtonOptions& options = {});

/// Laplace estimate of log pi(theta | y) up to a constant, on the internal
/// scale (prior Jacobians included). -inf when theta is outside the domain
/// or the approximation fails; never NaN.
double log_theta_posterior(const lgm::HyperModel& model, const Eigen::VectorXd& theta,
                           const Eigen::VectorXd* warm_start = nullptr,
                           GaussianApprox* approx_out = nullptr);

/// The same density expressed on the user scale of every free hyperparameter.
double log_theta_posterior_user(const lgm::HyperModel& model, const Eigen::VectorXd& user_theta);

struct NelderMeadResult {
  Eigen::VectorXd argmax;
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Maximizes f by the Nelder-Mead simplex method.
template <typename F>
NelderMeadResult nelder_mead_maximize(F&& f, const Eigen::VectorXd& start, double initial_step,
                                      double tolerance, int max_evaluations);

/// Central finite-difference Hessian of f at x.
template <typename F>
Eigen::MatrixXd fd_hessian(F&& f, const Eigen::VectorXd& x, double f_at_x, double h,
                           Eigen::VectorXd* gradient = nullptr);

struct GridPoint {
  Eigen::VectorXd theta;  // internal scale
  Eigen::VectorXd z;      // standardized coordinates
  double log_posterior = 0.0;
  double weight = 0.0;
};

struct ThetaGrid {
  std::vector<std::string> names;
  std::vector<priors::HyperTransform> transforms;
  std::vector<GridPoint> points;
  int mode_point = 0;
  Eigen::VectorXd mode;
  double log_posterior_at_mode = 0.0;
  Eigen::MatrixXd hessian_at_mode;  // of -log pi(theta | y)
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd scale_plus;   // split-scale corrections per standardized axis
  Eigen::VectorXd scale_minus;
  std::string strategy;  // "single", "grid" or "ccd"
  double log_evidence = 0.0;
  int evaluations = 0;
};

/// Per-grid-point results needed for latent marginals. Variances cover the
/// x coordinates (predictors excluded).
struct ConditionalSet {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> variances;
};

struct ExplorationResult {
  ThetaGrid grid;
  ConditionalSet conditionals;
  Eigen::VectorXd mode_latent;
};

/// Mode search, Hessian and grid exploration. `parallel` selects the OpenMP
/// evaluation of grid points; the serial path is the reference.
ExplorationResult explore(const lgm::HyperModel& model, const model::GridConfig& config);

/// Evaluates the Laplace objective at every theta in `thetas`, storing results
/// by index. Serial and OpenMP variants return identical values.
std::vector<double> evaluate_points(const lgm::HyperModel& model, const std::vector<Eigen::VectorXd>& thetas,
                                    const Eigen::VectorXd& warm_start, bool parallel,
                                    std::vector<GaussianApprox>* approx_out = nullptr);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double mode = 0.0;  // mode of the marginal (mixture) density
};

/// Quantile of a Gaussian mixture.
double mixture_quantile(const std::vector<double>& weights, const std::vector<double>& means,
                        const std::vector<double>& sds, double p);
Summary mixture_summary(const std::vector<double>& weights, const std::vector<double>& means,
                        const std::vector<double>& sds);

struct HyperSummary {
  std::string name;
  bool fixed = false;
  Summary user;
  double internal_mean = 0.0;
  double internal_sd = 0.0;
};

struct LatentSummaries {
  std::vector<std::string> names;
  std::vector<Summary> values;
};

/// Hyperparameter summaries on the user scale from the weighted grid.
std::vector<HyperSummary> hyper_summaries(const ThetaGrid& grid);
/// Latent mixture marginals.
LatentSummaries latent_summaries(const ThetaGrid& grid, const ConditionalSet& conditionals,
                                 const std::vector<std::string>& names, const std::vector<int>& indices);

struct GenericFit {
  ThetaGrid grid;
  std::vector<HyperSummary> hyper;
  LatentSummaries latent;
};

/// Full pipeline for any HyperModel with the given latent names/indices.
GenericFit fit_generic(const lgm::HyperModel& model, const model::GridConfig& config,
                       const std::vector<std::string>& latent_names, const std::vector<int>& latent_indices);

// ---------------------------------------------------------------------------
// Joint-model fitting.

struct SplineKnotSummary {
  double knot;
  Summary value;
};

struct FitPart {
  std::string label;  // "joint", "longitudinal" or "survival"
  ThetaGrid grid;
};

struct FitResult {
  model::ModelConfig config;
  std::vector<double> knots;
  std::vector<std::string> fixed_names;
  std::vector<int> subject_ids;
  LatentSummaries latent;
  std::vector<HyperSummary> hyper;    // every active hyperparameter, fixed ones flagged
  std::vector<HyperSummary> derived;  // variances 1/tau
  std::vector<SplineKnotSummary> spline;
  std::vector<std::pair<std::string, double>> theta_mode;  // user scale, all active
  double log_marginal_likelihood = 0.0;
  std::vector<FitPart> parts;
  bool separated = false;

  const Summary& latent_summary(const std::string& name) const;
  const HyperSummary& hyper_summary(const std::string& name) const;
  double theta_mode_value(const std::string& name) const;
};

/// Fits the joint model. When no association couples the submodels (nu fixed
/// at 0), the two submodels are fitted separately and merged.
FitResult fit(std::shared_ptr<const model::StackedDesign> design);

/// Latent coordinate names ("alpha[3]", fixed-effect names, "w[id]", ...),
/// predictor blocks excluded.
void latent_report_names(const model::StackedDesign& design, std::vector<std::string>& names,
                         std::vector<int>& indices);

}  // namespace jmlgm::inference

#include "jmlgm/detail/optim_impl.hpp"
