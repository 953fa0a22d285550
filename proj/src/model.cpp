#include "jmlgm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "jmlgm/errors.hpp"
#include "jmlgm/likelihoods.hpp"

namespace jmlgm::model {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
struct MapEntry {
  int col;
  double value;
};

/// Row-wise mapping A(theta). Every structural entry is emitted, zero or not.
std::vector<std::vector<MapEntry>> mapping_rows(const StackedDesign& d, const HyperParams& p,
                                                const std::vector<double>& nu) {
  const auto& lay = d.layout();
  const int a0 = lay[Block::Alpha].offset;
  const int b0 = lay[Block::Beta].offset;
  const int g0 = lay[Block::Gamma].offset;
  const int w0 = lay[Block::W].offset;
  const int v0 = lay[Block::V].offset;
  const int m0 = lay[Block::M].offset;
  const bool slope = d.has_slope();
  const bool frailty = lay[Block::M].length > 0;
  const Eigen::MatrixXd& fx = d.fixed_design();

  std::vector<std::vector<MapEntry>> rows(d.rows().size());
  int surv_counter = 0;
  for (std::size_t r = 0; r < d.rows().size(); ++r) {
    const StackedRow& row = d.rows()[r];
    auto& out = rows[r];
    if (row.kind == RowKind::Longitudinal) {
      const int k = *row.spline_knot;
      out.push_back({a0 + k, row.spline_weight});
      out.push_back({a0 + k + 1, 1.0 - row.spline_weight});
      for (int j = 0; j < d.p_long(); ++j) out.push_back({b0 + j, fx(static_cast<Eigen::Index>(r), j)});
      out.push_back({w0 + row.subject, 1.0});
      if (slope) out.push_back({v0 + row.subject, row.time});
    } else {
      for (int j = 0; j < d.p_surv(); ++j) {
        out.push_back({g0 + j, fx(static_cast<Eigen::Index>(r), d.p_long() + j)});
      }
      if (d.has_long()) {
        const auto [ww, wv] = association_weights(d.config().association, nu, row.time);
        out.push_back({w0 + row.subject, ww});
        if (slope) out.push_back({v0 + row.subject, wv});
      }
      if (frailty) out.push_back({m0 + surv_counter, 1.0});
      ++surv_counter;
    }
  }
  (void)p;
  return rows;
}

}  // namespace

Association parse_association(const std::string& key) {
  if (key == "eq4") return Association::InterceptOnly;
  if (key == "eq5") return Association::SlopeOnly;
  if (key == "eq6") return Association::IntSlopeShared;
  if (key == "eq7") return Association::IntSlopeSeparate;
  throw Error(ErrorCode::InvalidConfig, "unknown association '" + key + "' (expected eq4..eq7)");
}

std::string association_key(Association a) {
  switch (a) {
    case Association::InterceptOnly: return "eq4";
    case Association::SlopeOnly: return "eq5";
    case Association::IntSlopeShared: return "eq6";
    case Association::IntSlopeSeparate: return "eq7";
  }
  return "eq6";
}

int nu_arity(Association a) { return a == Association::IntSlopeSeparate ? 2 : 1; }

const char* block_name(Block b) {
  switch (b) {
    case Block::Alpha: return "alpha";
    case Block::Beta: return "beta";
    case Block::Gamma: return "gamma";
    case Block::W: return "w";
    case Block::V: return "v";
    case Block::M: return "m";
    case Block::EtaL: return "eta_L";
    case Block::EtaS: return "eta_S";
  }
  return "?";
}

LatentLayout::LatentLayout(int n_knots, int p_long, int p_surv, int n_w, int n_v, int n_m, int n_long,
                           int n_surv) {
  const int lengths[kBlockCount] = {n_knots, p_long, p_surv, n_w, n_v, n_m, n_long, n_surv};
  int offset = 0;
  for (int b = 0; b < kBlockCount; ++b) {
    blocks_[b] = {static_cast<Block>(b), offset, lengths[b]};
    offset += lengths[b];
  }
  dim_ = offset;
}

double HyperParams::get(const std::string& name) const {
  if (name == "tau_eps") return tau_eps;
  if (name == "kappa") return kappa;
  if (name == "tau_alpha") return tau_alpha;
  if (name == "tau_w") return tau_w;
  if (name == "tau_v") return tau_v;
  if (name == "rho") return rho;
  if (name == "nu" || name == "nu1") return nu1;
  if (name == "nu2") return nu2;
  if (name == "tau_m") return tau_m;
  throw Error(ErrorCode::UnknownHyperparameter, name);
}

void HyperParams::set(const std::string& name, double value) {
  if (name == "tau_eps") tau_eps = value;
  else if (name == "kappa") kappa = value;
  else if (name == "tau_alpha") tau_alpha = value;
  else if (name == "tau_w") tau_w = value;
  else if (name == "tau_v") tau_v = value;
  else if (name == "rho") rho = value;
  else if (name == "nu" || name == "nu1") nu1 = value;
  else if (name == "nu2") nu2 = value;
  else if (name == "tau_m") tau_m = value;
  else throw Error(ErrorCode::UnknownHyperparameter, name);
}

std::pair<double, double> association_weights(Association a, const std::vector<double>& nu, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::NonPositiveTime, "association time must be > 0");
  if (static_cast<int>(nu.size()) != nu_arity(a)) {
    throw Error(ErrorCode::WrongNuArity, association_key(a) + " needs " + std::to_string(nu_arity(a)) +
                                             " association parameter(s), got " + std::to_string(nu.size()));
  }
  switch (a) {
    case Association::InterceptOnly: return {nu[0], 0.0};
    case Association::SlopeOnly: return {0.0, nu[0] * s};
    case Association::IntSlopeShared: return {nu[0], nu[0] * s};
    case Association::IntSlopeSeparate: return {nu[0], nu[1] * s};
  }
  return {0.0, 0.0};
}

std::vector<double> default_knots(const JointData& data, int n_knots) {
  if (n_knots < 3) throw Error(ErrorCode::TooFewKnots, "need at least 3 knots");
  if (data.long_rows.empty()) return {};
  double lo = data.long_rows.front().time;
  double hi = lo;
  for (const auto& r : data.long_rows) {
    lo = std::min(lo, r.time);
    hi = std::max(hi, r.time);
  }
  if (!(hi > lo)) throw Error(ErrorCode::NonIncreasingKnots, "longitudinal times span a single point");
  std::vector<double> knots(static_cast<std::size_t>(n_knots));
  for (int i = 0; i < n_knots; ++i) knots[i] = lo + (hi - lo) * i / (n_knots - 1);
  knots.back() = hi;
  return knots;
}

StackedDesign::StackedDesign(const JointData& data, ModelConfig config)
    : data_(data), config_(std::move(config)) {
  n_long_ = static_cast<int>(data_.long_rows.size());
  n_surv_ = static_cast<int>(data_.surv_rows.size());
  if (n_long_ == 0 && n_surv_ == 0) throw Error(ErrorCode::EmptyData, "no rows");

  // Subjects.
  std::set<int> long_subjects;
  for (const auto& r : data_.long_rows) {
    if (!(r.time >= 0.0) || !std::isfinite(r.time)) {
      throw Error(ErrorCode::DomainError, "longitudinal time must be finite and >= 0");
    }
    if (!std::isfinite(r.y)) throw Error(ErrorCode::DomainError, "longitudinal response must be finite");
    if (r.x.size() != data_.x_names.size()) {
      throw Error(ErrorCode::DomainError, "longitudinal covariate count mismatch");
    }
    long_subjects.insert(r.subject);
  }
  std::set<int> surv_subjects;
  for (const auto& r : data_.surv_rows) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw Error(ErrorCode::NonPositiveTime, "survival time must be > 0");
    if (r.event != 0 && r.event != 1) throw Error(ErrorCode::DomainError, "event indicator must be 0 or 1");
    if (r.z.size() != data_.z_names.size()) throw Error(ErrorCode::DomainError, "survival covariate count mismatch");
    if (!surv_subjects.insert(r.subject).second) {
      throw Error(ErrorCode::DuplicateSurvivalRow, "subject " + std::to_string(r.subject) + " has two survival rows");
    }
  }
  if (n_long_ > 0 && n_surv_ > 0) {
    for (int s : long_subjects) {
      if (!surv_subjects.count(s)) {
        throw Error(ErrorCode::OrphanSurvivalRow,
                    "subject " + std::to_string(s) + " has longitudinal rows but no survival row");
      }
    }
    for (int s : surv_subjects) {
      if (!long_subjects.count(s)) {
        throw Error(ErrorCode::OrphanSurvivalRow,
                    "survival row of subject " + std::to_string(s) + " has no longitudinal rows");
      }
    }
  }
  const std::set<int>& all = n_surv_ > 0 ? surv_subjects : long_subjects;
  subject_ids_.assign(all.begin(), all.end());
  for (std::size_t i = 0; i < subject_ids_.size(); ++i) subject_lookup_[subject_ids_[i]] = static_cast<int>(i);

  if (n_surv_ > 0 && n_long_ > 0 && config_.random_effects == RandomEffects::Intercept &&
      config_.association != Association::InterceptOnly) {
    throw Error(ErrorCode::InvalidConfig, "intercept-only random effects require association eq4");
  }

  // Spline.
  if (n_long_ > 0) {
    knots_ = config_.spline.knots.empty() ? default_knots(data_, config_.spline.n_knots) : config_.spline.knots;
    const int n = static_cast<int>(knots_.size());
    auto structure = gmrf::rw2_precision({knots_, config_.spline.scaled, 1.0});
    // Null-space projector onto span{1, t} via an orthonormal basis.
    Eigen::MatrixXd basis(n, 2);
    for (int i = 0; i < n; ++i) {
      basis(i, 0) = 1.0;
      basis(i, 1) = knots_[i];
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
    const Eigen::MatrixXd projector = kSplineNullPrecision * q * q.transpose();
    gmrf::SparseSymMatrix null(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) null.add(i, j, projector(i, j));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(structure.dense() + projector);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "spline base precision");
    spline_base_logdet_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    spline_structure_ = std::make_shared<const gmrf::SparseSymMatrix>(std::move(structure));
    spline_null_ = std::make_shared<const gmrf::SparseSymMatrix>(std::move(null));
  }

  // Fixed effects: (X, 0) over (0, Z).
  const bool long_int = n_long_ > 0 && config_.long_intercept;
  const bool surv_int = n_surv_ > 0 && config_.surv_intercept;
  p_long_ = n_long_ > 0 ? static_cast<int>(data_.x_names.size()) + (long_int ? 1 : 0) : 0;
  p_surv_ = n_surv_ > 0 ? static_cast<int>(data_.z_names.size()) + (surv_int ? 1 : 0) : 0;
  if (long_int) fixed_names_.push_back("intercept");
  if (n_long_ > 0) fixed_names_.insert(fixed_names_.end(), data_.x_names.begin(), data_.x_names.end());
  if (surv_int) fixed_names_.push_back("intercept");
  if (n_surv_ > 0) fixed_names_.insert(fixed_names_.end(), data_.z_names.begin(), data_.z_names.end());
  fixed_ = Eigen::MatrixXd::Zero(n_long_ + n_surv_, p_long_ + p_surv_);

  rows_.reserve(static_cast<std::size_t>(n_long_ + n_surv_));
  for (int r = 0; r < n_long_; ++r) {
    const auto& src = data_.long_rows[r];
    const auto [knot, weight] = interpolate(src.time);
    const int subj = subject_lookup_.at(src.subject);
    rows_.push_back({RowKind::Longitudinal, subj, src.time, src.y, -1, knot, weight, subj});
    int c = 0;
    if (long_int) fixed_(r, c++) = 1.0;
    for (double v : src.x) fixed_(r, c++) = v;
  }
  for (int r = 0; r < n_surv_; ++r) {
    const auto& src = data_.surv_rows[r];
    const int subj = subject_lookup_.at(src.subject);
    rows_.push_back({RowKind::Survival, subj, src.time, kNaN, src.event, std::nullopt, kNaN,
                     n_long_ > 0 ? std::optional<int>(subj) : std::nullopt});
    int c = p_long_;
    if (surv_int) fixed_(n_long_ + r, c++) = 1.0;
    for (double v : src.z) fixed_(n_long_ + r, c++) = v;
  }

  const int n_sub = n_subjects();
  const int n_w = n_long_ > 0 ? n_sub : 0;
  const int n_v = has_slope() ? n_sub : 0;
  const int n_m = (config_.frailty && n_surv_ > 0) ? n_surv_ : 0;
  layout_ = LatentLayout(static_cast<int>(knots_.size()), p_long_, p_surv_, n_w, n_v, n_m, n_long_, n_surv_);
}

int StackedDesign::subject_index(int id) const {
  auto it = subject_lookup_.find(id);
  if (it == subject_lookup_.end()) throw Error(ErrorCode::UnknownSubject, "subject " + std::to_string(id));
  return it->second;
}

std::pair<int, double> StackedDesign::interpolate(double t) const {
  const int n = static_cast<int>(knots_.size());
  if (n < 2) throw Error(ErrorCode::TimeOutsideKnotRange, "no spline in this model");
  const double span = knots_.back() - knots_.front();
  const double slack = 1e-12 * span;
  if (t < knots_.front() - slack || t > knots_.back() + slack) {
    throw Error(ErrorCode::TimeOutsideKnotRange, "time " + std::to_string(t) + " outside [" +
                                                     std::to_string(knots_.front()) + ", " +
                                                     std::to_string(knots_.back()) + "]");
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  int left = static_cast<int>(it - knots_.begin()) - 1;
  left = std::clamp(left, 0, n - 2);
  const double tc = std::clamp(t, knots_[left], knots_[left + 1]);
  const double w = (knots_[left + 1] - tc) / (knots_[left + 1] - knots_[left]);
  return {left, w};
}

JointData StackedDesign::unstack() const {
  JointData out;
  out.x_names = data_.x_names;
  out.z_names = data_.z_names;
  const int x_skip = (n_long_ > 0 && config_.long_intercept) ? 1 : 0;
  const int z_skip = (n_surv_ > 0 && config_.surv_intercept) ? 1 : 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    const auto i = static_cast<Eigen::Index>(r);
    if (row.kind == RowKind::Longitudinal) {
      LongRow lr{subject_ids_[static_cast<std::size_t>(row.subject)], row.time, row.y, {}};
      for (int j = x_skip; j < p_long_; ++j) lr.x.push_back(fixed_(i, j));
      out.long_rows.push_back(std::move(lr));
    } else {
      SurvRow sr{subject_ids_[static_cast<std::size_t>(row.subject)], row.time, row.event, {}};
      for (int j = z_skip; j < p_surv_; ++j) sr.z.push_back(fixed_(i, p_long_ + j));
      out.surv_rows.push_back(std::move(sr));
    }
  }
  return out;
}

gmrf::SparseMatrix build_mapping(const StackedDesign& design, const HyperParams& theta) {
  std::vector<double> nu{theta.nu1};
  if (nu_arity(design.config().association) == 2) nu.push_back(theta.nu2);
  const auto rows = mapping_rows(design, theta, nu);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& e : rows[r]) t.emplace_back(static_cast<int>(r), e.col, e.value);
  }
  gmrf::SparseMatrix a(static_cast<Eigen::Index>(rows.size()), design.layout().eta_begin());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

RestPrior rest_prior(const StackedDesign& d, const HyperParams& p) {
  const auto& lay = d.layout();
  gmrf::SparseSymMatrix q(std::max(lay.dim(), 1));
  double log_det = 0.0;
  if (lay[Block::Alpha].length > 0) {
    q.add_block(d.spline_structure(), lay[Block::Alpha].offset, p.tau_alpha);
    q.add_block(d.spline_null(), lay[Block::Alpha].offset);
    log_det += d.spline_rank() * std::log(p.tau_alpha) + d.spline_base_logdet();
  }
  for (Block b : {Block::Beta, Block::Gamma}) {
    for (int j = 0; j < lay[b].length; ++j) q.add(lay[b].offset + j, lay[b].offset + j, kFixedEffectPrecision);
    log_det += lay[b].length * std::log(kFixedEffectPrecision);
  }
  const int nw = lay[Block::W].length;
  if (nw > 0) {
    const int w0 = lay[Block::W].offset;
    if (lay[Block::V].length > 0) {
      const int v0 = lay[Block::V].offset;
      const Eigen::Matrix2d qu = gmrf::intslope_precision_2x2(
          {1.0 / std::sqrt(p.tau_w), 1.0 / std::sqrt(p.tau_v), p.rho});
      for (int i = 0; i < nw; ++i) {
        q.add(w0 + i, w0 + i, qu(0, 0));
        q.add(v0 + i, w0 + i, qu(1, 0));
        q.add(v0 + i, v0 + i, qu(1, 1));
      }
      log_det += nw * (std::log(p.tau_w) + std::log(p.tau_v) - std::log1p(-p.rho * p.rho));
    } else {
      for (int i = 0; i < nw; ++i) q.add(w0 + i, w0 + i, p.tau_w);
      log_det += nw * std::log(p.tau_w);
    }
  }
  const int nm = lay[Block::M].length;
  for (int i = 0; i < nm; ++i) q.add(lay[Block::M].offset + i, lay[Block::M].offset + i, p.tau_m);
  log_det += nm * std::log(p.tau_m);
  return {std::move(q), log_det};
}

HyperSpace::HyperSpace(const StackedDesign& design) : design_(&design) {
  const auto& cfg = design.config();
  if (design.has_long()) active_.push_back("tau_eps");
  if (design.has_surv()) active_.push_back("kappa");
  if (design.has_long()) {
    active_.push_back("tau_alpha");
    active_.push_back("tau_w");
  }
  if (design.has_slope()) {
    active_.push_back("tau_v");
    active_.push_back("rho");
  }
  if (design.has_long() && design.has_surv()) {
    if (nu_arity(cfg.association) == 2) {
      active_.push_back("nu1");
      active_.push_back("nu2");
    } else {
      active_.push_back("nu");
    }
  }
  if (design.has_surv() && cfg.frailty) active_.push_back("tau_m");

  for (const auto& [name, spec] : cfg.priors) {
    (void)spec;
    priors::transform_for(name == "nu1" || name == "nu2" ? "nu" : name);  // rejects unknown names
  }
  for (const auto& name : active_) {
    priors::PriorSpec spec = priors::default_prior(name);
    if (auto it = cfg.priors.find(name); it != cfg.priors.end()) spec = it->second;
    if (name == "kappa" && cfg.baseline == Baseline::Exponential) {
      if (spec.type == priors::PriorSpec::Type::Fixed && spec.value != 1.0) {
        throw Error(ErrorCode::InvalidConfig, "exponential baseline requires kappa = 1");
      }
      spec = priors::PriorSpec::fixed(1.0);
    }
    const auto transform = priors::transform_for(name);
    if (spec.type == priors::PriorSpec::Type::Fixed) {
      transform.forward(spec.value);  // domain check
      fixed_values_.set(name, spec.value);
    } else {
      free_.push_back(name);
      transforms_.push_back(transform);
      priors_.push_back(spec);
    }
  }
}

HyperParams HyperSpace::to_params(const Eigen::VectorXd& internal) const {
  if (internal.size() != dim()) {
    throw Error(ErrorCode::DomainError, "theta has dimension " + std::to_string(internal.size()) +
                                            ", expected " + std::to_string(dim()));
  }
  HyperParams p = fixed_values_;
  for (int k = 0; k < dim(); ++k) p.set(free_[k], transforms_[k].backward(internal[k]));
  check_domain(p);
  return p;
}

Eigen::VectorXd HyperSpace::to_internal(const HyperParams& params) const {
  Eigen::VectorXd out(dim());
  for (int k = 0; k < dim(); ++k) out[k] = transforms_[k].forward(params.get(free_[k]));
  return out;
}

double HyperSpace::log_prior(const Eigen::VectorXd& internal) const {
  double acc = 0.0;
  for (int k = 0; k < dim(); ++k) acc += priors::log_prior_internal(priors_[k], transforms_[k], internal[k]);
  return acc;
}

Eigen::VectorXd HyperSpace::start() const {
  Eigen::VectorXd s(dim());
  for (int k = 0; k < dim(); ++k) {
    const auto& name = free_[k];
    if (name == "kappa") s[k] = 0.0;
    else if (name == "rho") s[k] = 0.0;
    else if (name == "nu" || name == "nu1" || name == "nu2") s[k] = 0.01;
    else s[k] = priors::prior_internal_mode(priors_[k], transforms_[k]);
  }
  return s;
}

void HyperSpace::check_domain(const HyperParams& p) const {
  for (const auto& name : active_) {
    const double v = p.get(name);
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, name + " is not finite");
    if (name == "rho") {
      if (!(std::abs(v) < 1.0)) throw Error(ErrorCode::InvalidRho, "|rho| must be < 1");
    } else if (priors::is_precision(name) || name == "kappa") {
      if (!(v > 0.0)) throw Error(ErrorCode::DomainError, name + " must be > 0");
    }
  }
}

std::vector<double> HyperSpace::nu(const HyperParams& p) const {
  if (nu_arity(design_->config().association) == 2) return {p.nu1, p.nu2};
  return {p.nu1};
}

JointModel::JointModel(std::shared_ptr<const StackedDesign> design, PredictorLink link)
    : design_(std::move(design)), space_(*design_), link_(link) {
  HyperParams unit;
  unit.nu1 = unit.nu2 = 1.0;
  unit.rho = 0.5;
  const auto inst = instance(unit);
  const gmrf::SparseMatrix at = inst.mapping.transpose();
  const gmrf::SparseMatrix pattern =
      gmrf::SparseMatrix(inst.prior_lower.selfadjointView<Eigen::Lower>()) + at * inst.mapping;
  ordering_ = gmrf::amd_ordering(pattern.triangularView<Eigen::Lower>());
}

int JointModel::latent_dim() const {
  const auto& lay = design_->layout();
  return link_ == PredictorLink::Augmented ? lay.dim() : lay.eta_begin();
}

double JointModel::log_prior_theta(const Eigen::VectorXd& theta) const { return space_.log_prior(theta); }

lgm::LatentGaussianModel JointModel::instance(const Eigen::VectorXd& theta) const {
  return instance(space_.to_params(theta));
}

lgm::LatentGaussianModel JointModel::instance(const HyperParams& params) const {
  const StackedDesign& d = *design_;
  space_.check_domain(params);
  const RestPrior rest = rest_prior(d, params);
  const int dim = d.layout().eta_begin();

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(rest.precision.entries().size() + static_cast<std::size_t>(dim));
  for (const auto& e : rest.precision.entries()) t.emplace_back(e.row, e.col, e.value);
  for (int i = 0; i < dim; ++i) t.emplace_back(i, i, 0.0);
  lgm::LatentGaussianModel m;
  m.prior_lower.resize(dim, dim);
  m.prior_lower.setFromTriplets(t.begin(), t.end());
  m.log_det_prior = rest.log_det;
  m.mapping = build_mapping(d, params);
  m.link_precision = link_ == PredictorLink::Augmented ? kPredictorPrecision : 0.0;
  m.tau_eps = params.tau_eps;
  m.kappa = params.kappa;
  m.observations.reserve(d.rows().size());
  for (const auto& row : d.rows()) {
    if (row.kind == RowKind::Longitudinal) {
      m.observations.push_back({lgm::Family::Gaussian, row.y, 1});
    } else {
      m.observations.push_back({lgm::Family::Weibull, row.time, row.event});
    }
  }
  if (ordering_.size() == dim) m.ordering = &ordering_;
  return m;
}

bool JointModel::separable() const {
  const StackedDesign& d = *design_;
  if (!d.has_long() || !d.has_surv()) return false;
  const auto& free = space_.free_names();
  for (const auto& n : free) {
    if (n == "nu" || n == "nu1" || n == "nu2") return false;
  }
  const HyperParams p = space_.to_params(Eigen::VectorXd::Zero(space_.dim()));
  for (double v : space_.nu(p)) {
    if (v != 0.0) return false;
  }
  return true;
}

lgm::DensityParts joint_logdensity_parts(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                         const JointModel& model) {
  const auto inst = model.instance(theta);
  if (x.size() != inst.full_dim()) throw Error(ErrorCode::DomainError, "latent vector has wrong dimension");
  const Eigen::VectorXd xr = x.head(inst.dim());
  const Eigen::VectorXd eta = inst.predictors(x);
  return {inst.log_prior_latent(xr, inst.has_link() ? &eta : nullptr), inst.log_likelihood(eta),
          model.log_prior_theta(theta)};
}

SplitDesign split(const StackedDesign& design) {
  const JointData& data = design.data();
  JointData long_data;
  long_data.long_rows = data.long_rows;
  long_data.x_names = data.x_names;
  JointData surv_data;
  surv_data.surv_rows = data.surv_rows;
  surv_data.z_names = data.z_names;
  ModelConfig long_cfg = design.config();
  long_cfg.spline.knots = design.knots();
  ModelConfig surv_cfg = design.config();
  SplitDesign out;
  if (!long_data.long_rows.empty()) out.longitudinal = std::make_shared<const StackedDesign>(long_data, long_cfg);
  if (!surv_data.surv_rows.empty()) out.survival = std::make_shared<const StackedDesign>(surv_data, surv_cfg);
  return out;
}

}  // namespace jmlgm::model
