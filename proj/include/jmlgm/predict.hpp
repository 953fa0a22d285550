#pragma once

// Post-fit prediction: Kaplan-Meier curves, plug-in model survival curves
// and fitted longitudinal trajectories.

#include <memory>
#include <optional>
#include <vector>

#include "jmlgm/inference.hpp"
#include "jmlgm/model.hpp"

namespace jmlgm::predict {

enum class CurveKind { KaplanMeier, ModelMean, SubjectSpecific };
const char* curve_kind_name(CurveKind k);

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
  CurveKind kind = CurveKind::KaplanMeier;
  std::optional<int> subject;
};

/// Product-limit estimator; the curve starts at (0, 1) and steps only at
/// event times.
SurvivalCurve kaplan_meier(const std::vector<model::SurvRow>& rows);

/// Right-continuous step-function value of a Kaplan-Meier curve at t.
double step_value(const SurvivalCurve& curve, double t);

/// Posterior-mean plug-in quantities used by the survival predictions.
struct PlugIn {
  double kappa = 1.0;
  std::vector<double> nu;
  Eigen::VectorXd gamma;
};
PlugIn plug_in(const inference::FitResult& fit, const model::StackedDesign& design);

/// S(s) = exp(-s^kappa exp(eta_S(s))) at posterior means for one subject.
SurvivalCurve subject_survival(const inference::FitResult& fit, const model::StackedDesign& design,
                               int subject_id, const std::vector<double>& times);

/// Population curve: random effects at zero, survival covariates at their
/// sample mean.
SurvivalCurve mean_survival(const inference::FitResult& fit, const model::StackedDesign& design,
                            const std::vector<double>& times);

struct TrajectoryPoint {
  double time;
  double mean;
  double lower;  // 2.5% band
  double upper;  // 97.5% band
};

/// Gaussian approximation at the hyperparameter mode, used for the
/// trajectory bands.
class TrajectoryModel {
 public:
  TrajectoryModel(const inference::FitResult& fit, std::shared_ptr<const model::StackedDesign> design);

  /// eta_L(t) for the subject: spline + fixed effects (covariates from the
  /// subject's first row) + random effects. Mean from the posterior
  /// marginals; band from the approximation at the mode.
  std::vector<TrajectoryPoint> trajectory(int subject_id, const std::vector<double>& times) const;

 private:
  const inference::FitResult* fit_;
  std::shared_ptr<const model::StackedDesign> design_;
  std::shared_ptr<const gmrf::Factorization> factor_;
};

}  // namespace jmlgm::predict
