#include "jmlgm/predict.hpp"

#include <algorithm>
#include <cmath>

#include "jmlgm/errors.hpp"

namespace jmlgm::predict {

const char* curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::KaplanMeier: return "KaplanMeier";
    case CurveKind::ModelMean: return "ModelMean";
    case CurveKind::SubjectSpecific: return "SubjectSpecific";
  }
  return "?";
}

SurvivalCurve kaplan_meier(const std::vector<model::SurvRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyData, "Kaplan-Meier needs at least one row");
  std::vector<std::pair<double, int>> obs;
  obs.reserve(rows.size());
  for (const auto& r : rows) {
    if (!(r.time > 0.0)) throw Error(ErrorCode::NonPositiveTime, "survival time must be > 0");
    if (r.event != 0 && r.event != 1) throw Error(ErrorCode::DomainError, "event indicator must be 0 or 1");
    obs.emplace_back(r.time, r.event);
  }
  std::sort(obs.begin(), obs.end());
  SurvivalCurve c;
  c.kind = CurveKind::KaplanMeier;
  c.times.push_back(0.0);
  c.survival.push_back(1.0);
  double s = 1.0;
  std::size_t i = 0;
  const std::size_t n = obs.size();
  while (i < n) {
    const double t = obs[i].first;
    const std::size_t at_risk = n - i;
    int deaths = 0;
    std::size_t j = i;
    while (j < n && obs[j].first == t) deaths += obs[j++].second;
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      c.times.push_back(t);
      c.survival.push_back(s);
    }
    i = j;
  }
  return c;
}

double step_value(const SurvivalCurve& curve, double t) {
  auto it = std::upper_bound(curve.times.begin(), curve.times.end(), t);
  if (it == curve.times.begin()) return 1.0;
  return curve.survival[static_cast<std::size_t>(it - curve.times.begin() - 1)];
}

PlugIn plug_in(const inference::FitResult& fit, const model::StackedDesign& design) {
  PlugIn p;
  p.kappa = fit.hyper_summary("kappa").user.mean;
  if (design.has_long()) {
    if (model::nu_arity(design.config().association) == 2) {
      p.nu = {fit.hyper_summary("nu1").user.mean, fit.hyper_summary("nu2").user.mean};
    } else {
      p.nu = {fit.hyper_summary("nu").user.mean};
    }
  }
  p.gamma.resize(design.p_surv());
  for (int j = 0; j < design.p_surv(); ++j) {
    p.gamma[j] = fit.latent_summary("gamma[" + design.fixed_names()[static_cast<std::size_t>(design.p_long() + j)] + "]").mean;
  }
  return p;
}

namespace {

SurvivalCurve survival_curve(const model::StackedDesign& design, const PlugIn& p, double base, double w, double v,
                             double m, const std::vector<double>& times) {
  SurvivalCurve c;
  for (double s : times) {
    if (s < 0.0) throw Error(ErrorCode::DomainError, "prediction time must be >= 0");
    c.times.push_back(s);
    if (s == 0.0) {
      c.survival.push_back(1.0);
      continue;
    }
    double eta = base + m;
    if (design.has_long()) {
      const auto [ww, wv] = model::association_weights(design.config().association, p.nu, s);
      eta += ww * w + wv * v;
    }
    c.survival.push_back(std::exp(-std::exp(p.kappa * std::log(s) + eta)));
  }
  return c;
}

}  // namespace

SurvivalCurve subject_survival(const inference::FitResult& fit, const model::StackedDesign& design,
                               int subject_id, const std::vector<double>& times) {
  if (!design.has_surv()) throw Error(ErrorCode::DomainError, "the fit has no survival submodel");
  design.subject_index(subject_id);
  const PlugIn p = plug_in(fit, design);
  const auto& rows = design.data().surv_rows;
  const auto row = std::find_if(rows.begin(), rows.end(), [&](const model::SurvRow& r) { return r.subject == subject_id; });
  double base = 0.0;
  int c = 0;
  if (design.config().surv_intercept) base += p.gamma[c++];
  for (double z : row->z) base += p.gamma[c++] * z;
  const std::string key = "[" + std::to_string(subject_id) + "]";
  const double w = design.has_long() ? fit.latent_summary("w" + key).mean : 0.0;
  const double v = design.has_slope() ? fit.latent_summary("v" + key).mean : 0.0;
  const double m = design.layout()[model::Block::M].length > 0 ? fit.latent_summary("m" + key).mean : 0.0;
  SurvivalCurve out = survival_curve(design, p, base, w, v, m, times);
  out.kind = CurveKind::SubjectSpecific;
  out.subject = subject_id;
  return out;
}

SurvivalCurve mean_survival(const inference::FitResult& fit, const model::StackedDesign& design,
                            const std::vector<double>& times) {
  if (!design.has_surv()) throw Error(ErrorCode::DomainError, "the fit has no survival submodel");
  const PlugIn p = plug_in(fit, design);
  const auto& rows = design.data().surv_rows;
  double base = 0.0;
  int c = 0;
  if (design.config().surv_intercept) base += p.gamma[c++];
  for (std::size_t j = 0; j < design.data().z_names.size(); ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.z[j];
    base += p.gamma[c++] * mean / static_cast<double>(rows.size());
  }
  SurvivalCurve out = survival_curve(design, p, base, 0.0, 0.0, 0.0, times);
  out.kind = CurveKind::ModelMean;
  return out;
}

TrajectoryModel::TrajectoryModel(const inference::FitResult& fit, std::shared_ptr<const model::StackedDesign> design)
    : fit_(&fit), design_(std::move(design)) {
  if (!design_->has_long()) throw Error(ErrorCode::DomainError, "the fit has no longitudinal submodel");
  const model::JointModel jm(design_);
  model::HyperParams mode;
  for (const auto& [name, value] : fit.theta_mode) mode.set(name, value);
  const auto inst = jm.instance(mode);
  const auto ga = inference::gaussian_approximation(inst);
  factor_ = ga.precision_factor;
}

std::vector<TrajectoryPoint> TrajectoryModel::trajectory(int subject_id, const std::vector<double>& times) const {
  const auto& d = *design_;
  const int subj = d.subject_index(subject_id);
  const auto& lay = d.layout();
  const auto& rows = d.data().long_rows;
  const auto first = std::find_if(rows.begin(), rows.end(), [&](const model::LongRow& r) { return r.subject == subject_id; });
  std::vector<double> x_cov;
  if (first != rows.end()) x_cov = first->x;
  else x_cov.assign(d.data().x_names.size(), 0.0);

  const int dim = lay.eta_begin();
  std::vector<double> knot_mean(static_cast<std::size_t>(lay[model::Block::Alpha].length));
  for (int k = 0; k < lay[model::Block::Alpha].length; ++k) knot_mean[static_cast<std::size_t>(k)] = fit_->spline[static_cast<std::size_t>(k)].value.mean;
  std::vector<double> beta_mean(static_cast<std::size_t>(d.p_long()));
  for (int j = 0; j < d.p_long(); ++j) {
    beta_mean[static_cast<std::size_t>(j)] = fit_->latent_summary("beta[" + d.fixed_names()[static_cast<std::size_t>(j)] + "]").mean;
  }
  const std::string key = "[" + std::to_string(subject_id) + "]";
  const double w_mean = fit_->latent_summary("w" + key).mean;
  const double v_mean = d.has_slope() ? fit_->latent_summary("v" + key).mean : 0.0;

  std::vector<double> covariates;
  if (d.config().long_intercept) covariates.push_back(1.0);
  covariates.insert(covariates.end(), x_cov.begin(), x_cov.end());

  std::vector<TrajectoryPoint> out;
  for (double t : times) {
    const auto [k, wl] = d.interpolate(t);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
    const int a0 = lay[model::Block::Alpha].offset;
    a[a0 + k] = wl;
    a[a0 + k + 1] = 1.0 - wl;
    double mean = wl * knot_mean[static_cast<std::size_t>(k)] + (1.0 - wl) * knot_mean[static_cast<std::size_t>(k + 1)];
    for (int j = 0; j < d.p_long(); ++j) {
      a[lay[model::Block::Beta].offset + j] = covariates[static_cast<std::size_t>(j)];
      mean += beta_mean[static_cast<std::size_t>(j)] * covariates[static_cast<std::size_t>(j)];
    }
    a[lay[model::Block::W].offset + subj] = 1.0;
    mean += w_mean;
    if (d.has_slope()) {
      a[lay[model::Block::V].offset + subj] = t;
      mean += v_mean * t;
    }
    const double sd = std::sqrt(std::max(0.0, a.dot(factor_->solve(a))));
    out.push_back({t, mean, mean - 1.959963984540054 * sd, mean + 1.959963984540054 * sd});
  }
  return out;
}

}  // namespace jmlgm::predict
