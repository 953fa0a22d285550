#include "jmlgm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include "jmlgm/errors.hpp"
#include "jmlgm/inference.hpp"

namespace jmlgm::oracle {

void McmcConfig::validate() const {
  if (iterations <= 0 || burn_in < 0 || thinning <= 0) {
    throw Error(ErrorCode::InvalidConfig, "iterations and thinning must be positive, burn-in non-negative");
  }
  if (iterations <= burn_in) throw Error(ErrorCode::InvalidConfig, "iterations must exceed burn-in");
  for (double s : scales) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidConfig, "step scales must be positive");
  }
}

const ParamSummary& McmcResult::find(const std::vector<ParamSummary>& set, const std::string& name) const {
  for (const auto& s : set) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::UnknownHyperparameter, "no summary named " + name);
}

double effective_sample_size(const Eigen::VectorXd& chain) {
  const auto n = static_cast<int>(chain.size());
  if (n < 4) return static_cast<double>(n);
  const double mean = chain.mean();
  std::vector<double> padded(static_cast<std::size_t>(2 * n), 0.0);
  for (int i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = chain[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<std::complex<double>> back;
  fft.inv(back, freq);
  const double c0 = back[0].real();
  if (!(c0 > 0.0)) return static_cast<double>(n);
  auto rho = [&](int k) { return back[static_cast<std::size_t>(k)].real() / c0; };
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, previous);  // initial monotone sequence
    sum += pair;
    previous = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / n);
  return n / tau;
}

ParamSummary summarize_chain(const std::string& name, const Eigen::VectorXd& chain) {
  ParamSummary s;
  s.name = name;
  const auto n = chain.size();
  s.mean = chain.mean();
  s.sd = n > 1 ? std::sqrt((chain.array() - s.mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
  std::vector<double> sorted(chain.data(), chain.data() + n);
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  s.q025 = quantile(0.025);
  s.q975 = quantile(0.975);
  s.ess = effective_sample_size(chain);
  s.mcse = s.sd / std::sqrt(s.ess);
  return s;
}

namespace {

/// Cholesky factor of a proposal covariance, from a precision matrix whose
/// eigenvalues are floored to keep it positive definite.
Eigen::MatrixXd proposal_root(const Eigen::MatrixXd& precision) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (precision + precision.transpose()));
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double floor = std::max(1e-8, 1e-10 * lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda[i] = std::max(lambda[i], floor);
  return eig.eigenvectors() * lambda.cwiseInverse().cwiseSqrt().asDiagonal();
}

class Sampler {
 public:
  Sampler(const lgm::HyperModel& model, const std::vector<LatentBlock>& blocks, const McmcConfig& config)
      : model_(model), blocks_(blocks), config_(config), rng_(config.seed) {}

  McmcResult run(const std::vector<std::string>& latent_names, const std::vector<int>& latent_indices);

 private:
  double theta_part(const Eigen::VectorXd& theta, std::unique_ptr<lgm::LatentGaussianModel>& inst) const;
  double log_target(const lgm::LatentGaussianModel& inst, const Eigen::VectorXd& x) const {
    return inst.log_joint(x);
  }
  void tune_shapes();
  Eigen::VectorXd draw(int b);

  const lgm::HyperModel& model_;
  std::vector<LatentBlock> blocks_;
  McmcConfig config_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};

  Eigen::VectorXd theta_;
  Eigen::VectorXd x_;
  std::unique_ptr<lgm::LatentGaussianModel> inst_;
  double prior_theta_ = 0.0;
  double latent_ = 0.0;  // log pi(x | theta) + log pi(y | x, theta)
  std::vector<Eigen::MatrixXd> roots_;
  std::vector<double> log_scales_;

  // Joint (theta, x) move: random walk on theta, x redrawn from the Gaussian
  // approximation at the proposed theta.
  struct Proposal {
    Eigen::VectorXd mode;
    std::shared_ptr<const gmrf::Factorization> factor;
    Eigen::VectorXd curvature;  // -d2 loglik / d eta2 at the mode
  };
  bool approximate(const lgm::LatentGaussianModel& inst, Proposal& out) const;
  double log_proposal(const lgm::LatentGaussianModel& inst, const Proposal& p, const Eigen::VectorXd& x) const;
  Proposal proposal_;  // at the current theta
  bool has_proposal_ = false;
  bool joint_ = false;
  Eigen::VectorXd anchor_;  // warm start of every proposal approximation
};

bool Sampler::approximate(const lgm::LatentGaussianModel& inst, Proposal& out) const {
  try {
    // Any deterministic function of theta is a valid proposal; a fixed warm
    // start and a loose tolerance keep it cheap.
    auto ga = inference::gaussian_approximation(inst, &anchor_, {1e-5, 50});
    out.mode = std::move(ga.mode);
    out.factor = ga.precision_factor;
    Eigen::VectorXd grad;
    inst.likelihood_derivatives(inst.mapping * out.mode, grad, out.curvature);
    out.curvature = -out.curvature;
    return out.mode.allFinite();
  } catch (const Error&) {
    return false;
  }
}

double Sampler::log_proposal(const lgm::LatentGaussianModel& inst, const Proposal& p, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = x - p.mode;
  const Eigen::VectorXd ar = inst.mapping * r;
  const double quad = inst.prior_quadratic(r) + ar.dot(p.curvature.cwiseProduct(ar));
  return 0.5 * p.factor->log_determinant() - 0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi) -
         0.5 * quad;
}

double Sampler::theta_part(const Eigen::VectorXd& theta, std::unique_ptr<lgm::LatentGaussianModel>& inst) const {
  if (!theta.allFinite()) return -std::numeric_limits<double>::infinity();
  try {
    const double prior = model_.log_prior_theta(theta);
    if (!std::isfinite(prior)) return prior;
    inst = std::make_unique<lgm::LatentGaussianModel>(model_.instance(theta));
    return prior;
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

void Sampler::tune_shapes() {
  const int nb = static_cast<int>(blocks_.size());
  roots_.assign(static_cast<std::size_t>(nb + 2), Eigen::MatrixXd());
  if (!blocks_.empty()) {
    // Conditional precision of each block: the block of Q + A' C A at x.
    Eigen::VectorXd grad;
    Eigen::VectorXd curv;
    inst_->likelihood_derivatives(inst_->predictors(x_), grad, curv);
    const gmrf::SparseMatrix q = inst_->prior_lower.selfadjointView<Eigen::Lower>();
    const gmrf::SparseMatrix at = inst_->mapping.transpose();
    const gmrf::SparseMatrix atc = at * (-curv).asDiagonal();
    const gmrf::SparseMatrix h = q + atc * inst_->mapping;
    for (int b = 0; b < nb; ++b) {
      const auto& blk = blocks_[static_cast<std::size_t>(b)];
      const Eigen::MatrixXd cols = Eigen::MatrixXd(h.middleCols(blk.offset, blk.length));
      roots_[static_cast<std::size_t>(b)] = proposal_root(cols.middleRows(blk.offset, blk.length));
    }
  }
  const int d = model_.theta_dim();
  if (d > 0) {
    auto f = [&](const Eigen::VectorXd& t) {
      std::unique_ptr<lgm::LatentGaussianModel> inst;
      const double p = theta_part(t, inst);
      if (!std::isfinite(p)) return p;
      return p + log_target(*inst, x_);
    };
    const Eigen::MatrixXd hess = inference::fd_hessian(f, theta_, prior_theta_ + latent_, 1e-3);
    roots_[static_cast<std::size_t>(nb)] = proposal_root(-hess);
  }
  if (joint_) {
    auto f = [&](const Eigen::VectorXd& t) { return inference::log_theta_posterior(model_, t); };
    const Eigen::MatrixXd hess = inference::fd_hessian(f, theta_, f(theta_), 1e-3);
    roots_[static_cast<std::size_t>(nb + 1)] = proposal_root(-hess);
  }
}

Eigen::VectorXd Sampler::draw(int b) {
  const auto& root = roots_[static_cast<std::size_t>(b)];
  Eigen::VectorXd z(root.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal_(rng_);
  return std::exp(log_scales_[static_cast<std::size_t>(b)]) * (root * z);
}

McmcResult Sampler::run(const std::vector<std::string>& latent_names, const std::vector<int>& latent_indices) {
  config_.validate();
  const int dim = model_.latent_dim();
  if (dim > kMaxLatentDim) {
    throw Error(ErrorCode::DimensionTooLarge, "latent dimension " + std::to_string(dim) + " exceeds " +
                                                  std::to_string(kMaxLatentDim));
  }
  const int nb = static_cast<int>(blocks_.size());
  const int d = model_.theta_dim();

  theta_ = model_.theta_start();
  prior_theta_ = theta_part(theta_, inst_);
  if (!std::isfinite(prior_theta_) || !inst_) throw Error(ErrorCode::DegenerateTarget, "prior is not finite at the start");
  if (inst_->has_link()) throw Error(ErrorCode::InvalidConfig, "the sampler needs an exact predictor link");
  x_ = Eigen::VectorXd::Zero(dim);
  if (dim > 0) {
    try {
      x_ = inference::gaussian_approximation(*inst_).mode;
    } catch (const Error&) {
      throw Error(ErrorCode::DegenerateTarget, "no latent mode at the start");
    }
  }
  anchor_ = x_;
  latent_ = log_target(*inst_, x_);
  if (!std::isfinite(latent_)) throw Error(ErrorCode::DegenerateTarget, "target is not finite at the start");

  joint_ = dim > 0 && d > 0;
  const int n_moves = nb + (joint_ ? 2 : 1);
  if (!config_.scales.empty() && static_cast<int>(config_.scales.size()) != n_moves) {
    throw Error(ErrorCode::InvalidConfig, "expected " + std::to_string(n_moves) + " step scales");
  }
  log_scales_.resize(static_cast<std::size_t>(nb + 2));
  for (int b = 0; b < n_moves; ++b) {
    const int len = b < nb ? blocks_[static_cast<std::size_t>(b)].length : d;
    log_scales_[static_cast<std::size_t>(b)] =
        config_.scales.empty() ? std::log(2.38 / std::sqrt(std::max(1, len))) : std::log(config_.scales[static_cast<std::size_t>(b)]);
  }
  tune_shapes();

  const int kept = (config_.iterations - config_.burn_in) / config_.thinning;
  McmcResult out;
  for (const auto& b : blocks_) out.block_names.push_back(b.name);
  out.block_names.push_back("theta");
  if (joint_) out.block_names.push_back("theta+x");
  out.theta_samples.resize(kept, d);
  out.latent_samples.resize(kept, dim);
  std::vector<long> accepted(static_cast<std::size_t>(n_moves), 0);
  std::vector<long> proposed(static_cast<std::size_t>(n_moves), 0);
  const std::vector<int> retune = {config_.burn_in / 4, config_.burn_in / 2};
  const double neg_inf = -std::numeric_limits<double>::infinity();
  int row = 0;

  for (int it = 0; it < config_.iterations; ++it) {
    const bool burning = it < config_.burn_in;
    if (burning && it > 0 && std::find(retune.begin(), retune.end(), it) != retune.end()) tune_shapes();
    for (int b = 0; b < n_moves; ++b) {
      double log_alpha = neg_inf;
      Eigen::VectorXd x_prop;
      Eigen::VectorXd theta_prop;
      std::unique_ptr<lgm::LatentGaussianModel> inst_prop;
      Proposal prop;
      double prior_prop = prior_theta_;
      double latent_prop = neg_inf;
      if (b < nb) {
        const auto& blk = blocks_[static_cast<std::size_t>(b)];
        x_prop = x_;
        x_prop.segment(blk.offset, blk.length) += draw(b);
        latent_prop = log_target(*inst_, x_prop);
        log_alpha = latent_prop - latent_;
      } else if (b == nb) {
        if (d == 0) continue;
        theta_prop = theta_ + draw(b);
        prior_prop = theta_part(theta_prop, inst_prop);
        if (std::isfinite(prior_prop)) latent_prop = log_target(*inst_prop, x_);
        log_alpha = prior_prop + latent_prop - prior_theta_ - latent_;
      } else {
        if (!has_proposal_) has_proposal_ = approximate(*inst_, proposal_);
        theta_prop = theta_ + draw(b);
        prior_prop = theta_part(theta_prop, inst_prop);
        if (has_proposal_ && std::isfinite(prior_prop) && approximate(*inst_prop, prop)) {
          Eigen::VectorXd z(dim);
          for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal_(rng_);
          x_prop = prop.mode + prop.factor->sample_from_standard(z);
          latent_prop = log_target(*inst_prop, x_prop);
          log_alpha = prior_prop + latent_prop - prior_theta_ - latent_ + log_proposal(*inst_, proposal_, x_) -
                      log_proposal(*inst_prop, prop, x_prop);
        }
      }
      if (std::isnan(log_alpha)) log_alpha = neg_inf;
      const bool accept = std::log(uniform_(rng_)) < log_alpha;
      if (accept) {
        latent_ = latent_prop;
        if (b < nb) {
          x_ = std::move(x_prop);
        } else {
          theta_ = std::move(theta_prop);
          prior_theta_ = prior_prop;
          inst_ = std::move(inst_prop);
          if (b == nb) {
            has_proposal_ = false;
          } else {
            x_ = std::move(x_prop);
            proposal_ = std::move(prop);
          }
        }
      }
      if (burning) {
        const double gain = 1.0 / std::pow(1.0 + it, 0.6);
        const double alpha = std::min(1.0, std::exp(log_alpha));
        log_scales_[static_cast<std::size_t>(b)] += 10.0 * gain * (alpha - config_.target_acceptance);
      } else {
        ++proposed[static_cast<std::size_t>(b)];
        if (accept) ++accepted[static_cast<std::size_t>(b)];
      }
    }
    if (!burning && (it - config_.burn_in) % config_.thinning == config_.thinning - 1 && row < kept) {
      out.theta_samples.row(row) = theta_.transpose();
      out.latent_samples.row(row) = x_.transpose();
      ++row;
    }
  }

  for (int b = 0; b < n_moves; ++b) {
    const auto p = proposed[static_cast<std::size_t>(b)];
    out.acceptance.push_back(p > 0 ? static_cast<double>(accepted[static_cast<std::size_t>(b)]) / static_cast<double>(p) : 0.0);
    out.scales.push_back(std::exp(log_scales_[static_cast<std::size_t>(b)]));
  }
  const auto names = model_.theta_names();
  const auto transforms = model_.theta_transforms();
  for (int j = 0; j < d; ++j) {
    const Eigen::VectorXd chain = out.theta_samples.col(j);
    out.theta_internal.push_back(summarize_chain(names[static_cast<std::size_t>(j)], chain));
    Eigen::VectorXd user(chain.size());
    for (Eigen::Index i = 0; i < chain.size(); ++i) user[i] = transforms[static_cast<std::size_t>(j)].backward(chain[i]);
    out.theta_user.push_back(summarize_chain(names[static_cast<std::size_t>(j)], user));
  }
  for (std::size_t k = 0; k < latent_names.size(); ++k) {
    out.latent.push_back(summarize_chain(latent_names[k], out.latent_samples.col(latent_indices[k])));
  }
  return out;
}

}  // namespace

McmcResult run_mcmc(const lgm::HyperModel& model, const std::vector<LatentBlock>& blocks, const McmcConfig& config,
                    const std::vector<std::string>& latent_names, const std::vector<int>& latent_indices) {
  if (latent_names.size() != latent_indices.size()) {
    throw Error(ErrorCode::InvalidConfig, "latent names and indices differ in length");
  }
  Sampler sampler(model, blocks, config);
  return sampler.run(latent_names, latent_indices);
}

McmcResult run_mcmc(std::shared_ptr<const model::StackedDesign> design, const McmcConfig& config) {
  const model::JointModel jm(design, model::PredictorLink::Exact);
  if (jm.latent_dim() > kMaxLatentDim) {
    throw Error(ErrorCode::DimensionTooLarge, "latent dimension " + std::to_string(jm.latent_dim()) + " exceeds " +
                                                  std::to_string(kMaxLatentDim));
  }
  std::vector<LatentBlock> blocks;
  for (const auto& b : design->layout().blocks()) {
    if (b.block == model::Block::EtaL || b.block == model::Block::EtaS || b.length == 0) continue;
    blocks.push_back({model::block_name(b.block), b.offset, b.length});
  }
  std::vector<std::string> names;
  std::vector<int> indices;
  inference::latent_report_names(*design, names, indices);
  return run_mcmc(jm, blocks, config, names, indices);
}

}  // namespace jmlgm::oracle
