#pragma once

// Synthetic joint longitudinal/survival data generated under the model.

#include <cstdint>
#include <functional>
#include <vector>

#include "jmlgm/model.hpp"

namespace jmlgm::sim {

enum class HazardMode { AtEventTime, ExactTimeVarying };

struct Scenario {
  int n_subjects = 300;
  std::vector<double> schedule;  // observation times; empty = 9 equally spaced on [0, 4]
  std::function<double(double)> trajectory = [](double t) { return t * t; };
  std::vector<double> beta;      // longitudinal covariate effects, covariates ~ N(0, 1)
  double surv_intercept = -1.5;
  std::vector<double> gamma;     // survival covariate effects, covariates ~ N(0, 1)
  model::RandomEffects random_effects = model::RandomEffects::Intercept;
  double sigma_w = 0.5;
  double sigma_v = 0.5;
  double rho = 0.0;
  model::Association association = model::Association::InterceptOnly;
  std::vector<double> nu{1.0};
  double kappa = 1.0;
  double tau_eps = 10.0;
  double horizon = 4.0;  // administrative censoring time s^X
  HazardMode mode = HazardMode::AtEventTime;
  std::uint64_t seed = 1;
};

struct SubjectTruth {
  int id;
  double w;
  double v;
  double event_time;  // uncensored draw s*; +inf if the hazard never reaches the target
  double residual;    // fixed-point or inverse-transform residual
};

struct Simulated {
  model::JointData data;
  std::vector<SubjectTruth> subjects;
};

Simulated simulate_joint(const Scenario& scenario);

/// Cumulative hazard of kappa u^(kappa-1) exp(a + b u) on [0, s].
double cumulative_hazard(double kappa, double a, double b, double s);

/// Default schedule: 9 equally spaced times on [0, 4].
std::vector<double> default_schedule();

}  // namespace jmlgm::sim
