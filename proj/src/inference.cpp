#include "jmlgm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <Eigen/Eigenvalues>

#include "jmlgm/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jmlgm::inference {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

bool all_gaussian(const lgm::LatentGaussianModel& m) {
  return std::all_of(m.observations.begin(), m.observations.end(),
                     [](const lgm::Observation& o) { return o.family == lgm::Family::Gaussian; });
}

/// Lower triangle of Q + A' diag(d) A.
gmrf::SparseMatrix posterior_precision(const lgm::LatentGaussianModel& m, const gmrf::SparseMatrix& at,
                                       const Eigen::VectorXd& d) {
  const gmrf::SparseMatrix q = m.prior_lower.selfadjointView<Eigen::Lower>();
  const gmrf::SparseMatrix atd = at * d.asDiagonal();
  const gmrf::SparseMatrix full = q + atd * m.mapping;
  return full.triangularView<Eigen::Lower>();
}

double objective(const lgm::LatentGaussianModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& eta) {
  double out = -0.5 * m.prior_quadratic(x) + m.log_likelihood(eta);
  if (m.has_link()) out -= 0.5 * m.link_precision * (eta - m.mapping * x).squaredNorm();
  return out;
}

struct BatchResult {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> variances;
};

/// Evaluates the Laplace objective at each theta; for points whose value is
/// at least `keep_above`, also stores the conditional mean and marginal
/// variances when `conditionals` is set.
BatchResult evaluate_batch(const lgm::HyperModel& model, const std::vector<Eigen::VectorXd>& thetas,
                           const Eigen::VectorXd& warm, bool parallel, bool conditionals, double keep_above) {
  const auto n = static_cast<int>(thetas.size());
  BatchResult out;
  out.values.assign(thetas.size(), kNegInf);
  if (conditionals) {
    out.means.resize(thetas.size());
    out.variances.resize(thetas.size());
  }
  std::exception_ptr failure;
  const Eigen::VectorXd* warm_ptr = warm.size() == model.latent_dim() ? &warm : nullptr;

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k = 0; k < n; ++k) {
    try {
      GaussianApprox ga;
      const double v = log_theta_posterior(model, thetas[static_cast<std::size_t>(k)], warm_ptr, &ga);
      out.values[static_cast<std::size_t>(k)] = v;
      if (conditionals && v >= keep_above && ga.precision_factor) {
        out.means[static_cast<std::size_t>(k)] = ga.mode;
        out.variances[static_cast<std::size_t>(k)] = ga.precision_factor->marginal_variances();
      }
    } catch (...) {
#pragma omp critical(jmlgm_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Finite-difference gradient and Hessian of the Laplace objective from one
/// batch of evaluations.
void fd_derivatives(const lgm::HyperModel& model, const Eigen::VectorXd& x, double fx, double h,
                    const Eigen::VectorXd& warm, bool parallel, Eigen::VectorXd& gradient,
                    Eigen::MatrixXd& hessian) {
  const auto d = x.size();
  std::vector<Eigen::VectorXd> pts;
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd p = x;
    p[i] += h;
    pts.push_back(p);
    p[i] -= 2.0 * h;
    pts.push_back(p);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          Eigen::VectorXd p = x;
          p[i] += si * h;
          p[j] += sj * h;
          pts.push_back(p);
        }
      }
    }
  }
  const auto f = evaluate_batch(model, pts, warm, parallel, false, 0.0).values;
  gradient.resize(d);
  hessian.resize(d, d);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double fp = f[k++];
    const double fm = f[k++];
    gradient[i] = (fp - fm) / (2.0 * h);
    hessian(i, i) = (fp - 2.0 * fx + fm) / (h * h);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double fpp = f[k++];
      const double fpm = f[k++];
      const double fmp = f[k++];
      const double fmm = f[k++];
      hessian(i, j) = hessian(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
}

/// Standardized point -> internal theta with split scales.
Eigen::VectorXd to_theta(const ThetaGrid& g, const Eigen::VectorXd& z) {
  Eigen::VectorXd scaled(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double s = z[j] > 0 ? g.scale_plus[j] : (z[j] < 0 ? g.scale_minus[j] : 1.0);
    scaled[j] = z[j] * s / std::sqrt(g.eigenvalues[j]);
  }
  return g.mode + g.eigenvectors * scaled;
}

double log_split_jacobian(const ThetaGrid& g, const Eigen::VectorXd& z) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (z[j] > 0) acc += std::log(g.scale_plus[j]);
    else if (z[j] < 0) acc += std::log(g.scale_minus[j]);
    else acc += std::log(0.5 * (g.scale_plus[j] + g.scale_minus[j]));
  }
  return acc;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

GaussianApprox gaussian_approximation(const lgm::LatentGaussianModel& model, const Eigen::VectorXd* start,
                                      const NewtonOptions& options) {
  const int d = model.dim();
  const int n = model.n_obs();
  const double k = model.link_precision;
  const bool link = model.has_link();
  GaussianApprox out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd eta;
  if (start && start->size() == model.full_dim()) {
    x = start->head(d);
    eta = link ? Eigen::VectorXd(start->tail(n)) : Eigen::VectorXd(model.mapping * x);
  } else {
    eta = Eigen::VectorXd::Zero(n);
  }
  const gmrf::SparseMatrix at = model.mapping.transpose();
  const bool quadratic = all_gaussian(model);
  Eigen::VectorXd grad;
  Eigen::VectorXd curv;
  Eigen::VectorXd c;
  std::shared_ptr<const gmrf::Factorization> factor;
  double current = quadratic ? 0.0 : objective(model, x, eta);
  bool converged = false;

  // Newton on (x, eta) with eta eliminated: the x-block of the system is the
  // Schur complement Q + A' diag(k c / (k + c)) A.
  auto newton_target = [&](Eigen::VectorXd& x_new, Eigen::VectorXd& eta_new) {
    model.likelihood_derivatives(eta, grad, curv);
    c = -curv;
    const Eigen::VectorXd b_eta = grad + c.cwiseProduct(eta);
    Eigen::VectorXd dvec;
    Eigen::VectorXd rhs;
    if (link) {
      const Eigen::VectorXd denom = c.array() + k;
      dvec = (k * c.array() / denom.array()).matrix();
      rhs = at * (k * b_eta.array() / denom.array()).matrix();
    } else {
      dvec = c;
      rhs = at * b_eta;
    }
    factor = std::make_shared<const gmrf::Factorization>(posterior_precision(model, at, dvec), model.ordering);
    x_new = factor->solve(rhs);
    if (link) {
      eta_new = ((b_eta + k * (model.mapping * x_new)).array() / (c.array() + k)).matrix();
    } else {
      eta_new = model.mapping * x_new;
    }
  };

  Eigen::VectorXd x_new;
  Eigen::VectorXd eta_new;
  for (int it = 0; it < options.max_iterations; ++it) {
    newton_target(x_new, eta_new);
    const Eigen::VectorXd dx = x_new - x;
    const Eigen::VectorXd deta = eta_new - eta;
    ++out.iterations;
    if (!dx.allFinite() || !deta.allFinite()) throw Error(ErrorCode::NewtonDiverged, "non-finite Newton step");
    const double full = std::max(d > 0 ? dx.cwiseAbs().maxCoeff() : 0.0, n > 0 ? deta.cwiseAbs().maxCoeff() : 0.0);
    if (quadratic) {
      // The conditional is Gaussian: one step lands on the exact mode.
      x = x_new;
      eta = eta_new;
      ++out.steps;
      converged = true;
      break;
    }
    if (full < options.tolerance) {
      x = x_new;
      eta = eta_new;
      converged = true;
      break;
    }
    // Backtrack only far from the mode; close to it the objective differences
    // are below its round-off and the full step is safe for a concave target.
    double t = 1.0;
    if (full > 1e-3) {
      double candidate = objective(model, x + dx, eta + deta);
      while (!(candidate >= current) && t > 1e-10) {
        t *= 0.5;
        candidate = objective(model, x + t * dx, eta + t * deta);
      }
      if (!std::isfinite(candidate)) throw Error(ErrorCode::NewtonDiverged, "objective is not finite");
    }
    x += t * dx;
    eta += t * deta;
    current = objective(model, x, eta);
    ++out.steps;
  }
  if (!converged) {
    throw Error(ErrorCode::MaxIterations, "Newton iteration did not converge in " +
                                              std::to_string(options.max_iterations) + " iterations");
  }
  if (!quadratic) newton_target(x_new, eta_new);  // factor and curvature at the mode

  double log_det = factor->log_determinant();
  if (link) log_det += (c.array() + k).log().sum();
  out.mode.resize(model.full_dim());
  out.mode.head(d) = x;
  if (link) out.mode.tail(n) = eta;
  out.precision_factor = factor;
  out.log_normalizer = 0.5 * log_det - 0.5 * model.full_dim() * kLog2Pi;
  out.log_prior_latent = model.log_prior_latent(x, link ? &eta : nullptr);
  out.log_likelihood = model.log_likelihood(eta);
  return out;
}

double log_theta_posterior(const lgm::HyperModel& model, const Eigen::VectorXd& theta,
                           const Eigen::VectorXd* warm_start, GaussianApprox* approx_out) {
  if (!theta.allFinite()) return kNegInf;
  try {
    const double prior = model.log_prior_theta(theta);
    if (!std::isfinite(prior)) return kNegInf;
    const auto inst = model.instance(theta);
    GaussianApprox ga = gaussian_approximation(inst, warm_start);
    const double value = prior + ga.log_prior_latent + ga.log_likelihood - ga.log_normalizer;
    if (approx_out) *approx_out = std::move(ga);
    return std::isfinite(value) ? value : kNegInf;
  } catch (const Error&) {
    return kNegInf;
  }
}

double log_theta_posterior_user(const lgm::HyperModel& model, const Eigen::VectorXd& user_theta) {
  const auto transforms = model.theta_transforms();
  Eigen::VectorXd internal(user_theta.size());
  double log_jac = 0.0;
  try {
    for (Eigen::Index j = 0; j < user_theta.size(); ++j) {
      internal[j] = transforms[static_cast<std::size_t>(j)].forward(user_theta[j]);
      log_jac += transforms[static_cast<std::size_t>(j)].log_jacobian(internal[j]);
    }
  } catch (const Error&) {
    return kNegInf;
  }
  return log_theta_posterior(model, internal) - log_jac;
}

std::vector<double> evaluate_points(const lgm::HyperModel& model, const std::vector<Eigen::VectorXd>& thetas,
                                    const Eigen::VectorXd& warm_start, bool parallel,
                                    std::vector<GaussianApprox>* approx_out) {
  if (!approx_out) return evaluate_batch(model, thetas, warm_start, parallel, false, 0.0).values;
  const auto n = static_cast<int>(thetas.size());
  std::vector<double> values(thetas.size(), kNegInf);
  approx_out->assign(thetas.size(), GaussianApprox{});
  const Eigen::VectorXd* warm = warm_start.size() == model.latent_dim() ? &warm_start : nullptr;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k = 0; k < n; ++k) {
    values[static_cast<std::size_t>(k)] =
        log_theta_posterior(model, thetas[static_cast<std::size_t>(k)], warm, &(*approx_out)[static_cast<std::size_t>(k)]);
  }
  return values;
}

ExplorationResult explore(const lgm::HyperModel& model, const model::GridConfig& config) {
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
  const int d = model.theta_dim();
  const bool parallel = config.parallel;
  ExplorationResult res;
  ThetaGrid& g = res.grid;
  g.names = model.theta_names();
  g.transforms = model.theta_transforms();

  if (d == 0) {
    GaussianApprox ga;
    const Eigen::VectorXd empty(0);
    const double v = log_theta_posterior(model, empty, nullptr, &ga);
    if (!std::isfinite(v)) throw Error(ErrorCode::OptimizerFailed, "log posterior is not finite");
    g.points.push_back({empty, empty, v, 1.0});
    g.mode = empty;
    g.log_posterior_at_mode = v;
    g.strategy = "single";
    g.log_evidence = v;
    g.evaluations = 1;
    g.scale_plus = g.scale_minus = g.eigenvalues = empty;
    res.mode_latent = ga.mode;
    res.conditionals.means.push_back(ga.mode);
    res.conditionals.variances.push_back(ga.precision_factor->marginal_variances());
    return res;
  }

  // Mode search from the documented start, latent warm start fixed there.
  const Eigen::VectorXd start = model.theta_start();
  GaussianApprox start_approx;
  const double start_value = log_theta_posterior(model, start, nullptr, &start_approx);
  if (!std::isfinite(start_value)) {
    throw Error(ErrorCode::OptimizerFailed, "log posterior is not finite at the start point");
  }
  const Eigen::VectorXd warm = start_approx.mode;
  int evaluations = 1;
  auto f = [&](const Eigen::VectorXd& t) { return log_theta_posterior(model, t, &warm); };
  NelderMeadResult nm =
      nelder_mead_maximize(f, start, 1.0, config.simplex_tolerance, config.max_evaluations);
  evaluations += nm.evaluations;
  Eigen::VectorXd mode = nm.argmax;
  double mode_value = nm.value;
  if (!std::isfinite(mode_value)) throw Error(ErrorCode::OptimizerFailed, "simplex search found no finite point");

  // Newton polishing on finite-difference derivatives.
  const double h = config.hessian_step;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hess;
  for (int it = 0; it < 30; ++it) {
    fd_derivatives(model, mode, mode_value, h, warm, parallel, gradient, hess);
    evaluations += 2 * d * d;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-hess);
    Eigen::VectorXd lam = eig.eigenvalues();
    const double floor = std::max(1e-8, 1e-6 * lam.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < d; ++j) lam[j] = std::max(std::abs(lam[j]), floor);
    Eigen::VectorXd step = eig.eigenvectors() * (eig.eigenvectors().transpose() * gradient).cwiseQuotient(lam);
    const double longest = step.cwiseAbs().maxCoeff();
    if (longest > 1.0) step *= 1.0 / longest;
    if (!step.allFinite() || longest < 1e-5) break;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      const Eigen::VectorXd cand = mode + t * step;
      const double v = f(cand);
      ++evaluations;
      if (v > mode_value) {
        mode = cand;
        mode_value = v;
        moved = true;
        break;
      }
    }
    if (!moved || t * longest < 1e-5) break;
  }
  fd_derivatives(model, mode, mode_value, h, warm, parallel, gradient, hess);
  evaluations += 2 * d * d;

  g.mode = mode;
  g.log_posterior_at_mode = mode_value;
  g.hessian_at_mode = -hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.hessian_at_mode);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0) || !eig.eigenvalues().allFinite()) {
    throw Error(ErrorCode::SingularHessian, "Hessian of -log pi(theta|y) is not positive definite at the mode");
  }
  g.eigenvalues = eig.eigenvalues();
  g.eigenvectors = eig.eigenvectors();

  // Split scales from evaluations two standard deviations out on each axis.
  g.scale_plus = Eigen::VectorXd::Ones(d);
  g.scale_minus = Eigen::VectorXd::Ones(d);
  {
    std::vector<Eigen::VectorXd> axis;
    for (int j = 0; j < d; ++j) {
      for (double sgn : {2.0, -2.0}) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
        z[j] = sgn;
        axis.push_back(to_theta(g, z));
      }
    }
    const auto vals = evaluate_batch(model, axis, warm, parallel, false, 0.0).values;
    evaluations += static_cast<int>(axis.size());
    for (int j = 0; j < d; ++j) {
      for (int s = 0; s < 2; ++s) {
        const double drop = mode_value - vals[static_cast<std::size_t>(2 * j + s)];
        double scale = drop > 0.0 && std::isfinite(drop) ? std::sqrt(2.0 / drop) : (drop > 0.0 ? 0.2 : 1.0);
        scale = std::clamp(scale, 0.2, 5.0);
        (s == 0 ? g.scale_plus : g.scale_minus)[j] = scale;
      }
    }
  }

  // Design points in standardized coordinates.
  std::vector<Eigen::VectorXd> zs;
  std::vector<double> base_log_weight;
  const bool dense = d <= config.max_dense_dim;
  if (dense) {
    g.strategy = "grid";
    const double radius = std::sqrt(2.0 * (config.drop + 1.5));
    const int half = static_cast<int>(std::floor(radius / config.step));
    std::vector<int> idx(static_cast<std::size_t>(d), -half);
    while (true) {
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z[j] = idx[static_cast<std::size_t>(j)] * config.step;
      if (z.squaredNorm() <= radius * radius + 1e-12) {
        zs.push_back(z);
        base_log_weight.push_back(0.0);
      }
      int j = 0;
      while (j < d && ++idx[static_cast<std::size_t>(j)] > half) idx[static_cast<std::size_t>(j++)] = -half;
      if (j == d) break;
    }
  } else {
    g.strategy = "ccd";
    const double f0 = config.ccd_f0;
    const double r = f0 * std::sqrt(static_cast<double>(d));
    zs.push_back(Eigen::VectorXd::Zero(d));
    for (int j = 0; j < d; ++j) {
      for (double sgn : {1.0, -1.0}) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
        z[j] = sgn * r;
        zs.push_back(z);
      }
    }
    // Half fraction: sign patterns with an even number of minus signs.
    for (long mask = 0; mask < (1L << d); ++mask) {
      if (__builtin_popcountl(static_cast<unsigned long>(mask)) % 2 != 0) continue;
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z[j] = ((mask >> j) & 1L) ? -f0 : f0;
      zs.push_back(z);
    }
    const double n_other = static_cast<double>(zs.size() - 1);
    const double a0 = 1.0 - 1.0 / (f0 * f0);
    const double a1 = 1.0 / (f0 * f0 * n_other);
    base_log_weight.push_back(std::log(a0));
    for (std::size_t k = 1; k < zs.size(); ++k) base_log_weight.push_back(std::log(a1));
  }

  std::vector<Eigen::VectorXd> thetas;
  thetas.reserve(zs.size());
  for (const auto& z : zs) thetas.push_back(to_theta(g, z));
  const double keep_above = dense ? mode_value - config.drop : kNegInf;
  BatchResult batch = evaluate_batch(model, thetas, warm, parallel, true, keep_above);
  evaluations += static_cast<int>(thetas.size());

  // The design centre is the mode; its value may differ from the search value
  // only through warm-start round-off.
  std::vector<double> log_w;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const double v = batch.values[k];
    if (!std::isfinite(v) || v < keep_above) continue;
    if (batch.means[k].size() == 0) continue;
    double lw = v - mode_value + log_split_jacobian(g, zs[k]) + base_log_weight[k];
    if (!dense) lw += 0.5 * zs[k].squaredNorm();
    if (zs[k].isZero(0.0)) g.mode_point = static_cast<int>(g.points.size());
    g.points.push_back({thetas[k], zs[k], v, lw});
    log_w.push_back(lw);
    res.conditionals.means.push_back(std::move(batch.means[k]));
    res.conditionals.variances.push_back(std::move(batch.variances[k]));
  }
  if (g.points.empty()) throw Error(ErrorCode::EmptyGrid, "no design point retained");
  const double norm = log_sum_exp(log_w);
  double total = 0.0;
  for (auto& p : g.points) {
    p.weight = std::exp(p.weight - norm);
    total += p.weight;
  }
  for (auto& p : g.points) p.weight /= total;

  const double half_log_det = -0.5 * g.eigenvalues.array().log().sum();
  if (dense) {
    g.log_evidence = mode_value + d * std::log(config.step) + half_log_det + norm;
  } else {
    g.log_evidence = mode_value + 0.5 * d * kLog2Pi + half_log_det + norm;
  }
  g.evaluations = evaluations;
  res.mode_latent = res.conditionals.means[static_cast<std::size_t>(g.mode_point)];
  return res;
}

double mixture_quantile(const std::vector<double>& weights, const std::vector<double>& means,
                        const std::vector<double>& sds, double p) {
  if (weights.empty()) throw Error(ErrorCode::EmptyGrid, "empty mixture");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DomainError, "probability must lie in (0, 1)");
  if (weights.size() == 1) return means[0] + sds[0] * normal_quantile(p);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    lo = std::min(lo, means[k] - 12.0 * sds[k]);
    hi = std::max(hi, means[k] + 12.0 * sds[k]);
  }
  auto cdf = [&](double q) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      acc += weights[k] * (sds[k] > 0.0 ? normal_cdf((q - means[k]) / sds[k]) : (q >= means[k] ? 1.0 : 0.0));
    }
    return acc - p;
  };
  if (!(hi > lo)) return lo;
  std::uintmax_t iters = 300;
  const auto r = boost::math::tools::toms748_solve(cdf, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

Summary mixture_summary(const std::vector<double>& weights, const std::vector<double>& means,
                        const std::vector<double>& sds) {
  Summary s;
  if (weights.size() == 1) {
    s.mean = means[0];
    s.sd = sds[0];
    s.q025 = means[0] + sds[0] * normal_quantile(0.025);
    s.q50 = means[0];
    s.q975 = means[0] + sds[0] * normal_quantile(0.975);
    s.mode = means[0];
    return s;
  }
  double second = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    s.mean += weights[k] * means[k];
    second += weights[k] * (sds[k] * sds[k] + means[k] * means[k]);
  }
  s.sd = std::sqrt(std::max(0.0, second - s.mean * s.mean));
  s.q025 = mixture_quantile(weights, means, sds, 0.025);
  s.q50 = mixture_quantile(weights, means, sds, 0.5);
  s.q975 = mixture_quantile(weights, means, sds, 0.975);

  auto neg_density = [&](double x) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const double u = (x - means[k]) / sds[k];
      acc += weights[k] * std::exp(-0.5 * u * u) / sds[k];
    }
    return -acc;
  };
  double best = means[0];
  double best_val = neg_density(best);
  double widest = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    widest = std::max(widest, sds[k]);
    const double v = neg_density(means[k]);
    if (v < best_val) {
      best_val = v;
      best = means[k];
    }
  }
  const auto r = boost::math::tools::brent_find_minima(neg_density, best - widest, best + widest, 40);
  s.mode = r.second <= best_val ? r.first : best;
  return s;
}

namespace {

/// Summary of g(theta_j) where theta_j has weighted grid values and an
/// internal-scale Gaussian fit; g is monotone.
Summary transformed_summary(const ThetaGrid& grid, int j, const std::function<double(double)>& g,
                            const std::function<double(double)>& log_abs_dg, bool increasing, double& m,
                            double& sd) {
  m = 0.0;
  for (const auto& p : grid.points) m += p.weight * p.theta[j];
  double var = 0.0;
  for (const auto& p : grid.points) var += p.weight * (p.theta[j] - m) * (p.theta[j] - m);
  sd = std::sqrt(var);
  if (!(sd > 0.0)) sd = 1.0 / std::sqrt(std::max(grid.hessian_at_mode(j, j), 1e-300));

  Summary s;
  double second = 0.0;
  for (const auto& p : grid.points) {
    const double v = g(p.theta[j]);
    s.mean += p.weight * v;
    second += p.weight * v * v;
  }
  s.sd = std::sqrt(std::max(0.0, second - s.mean * s.mean));
  const double lo = g(m + sd * normal_quantile(0.025));
  const double hi = g(m + sd * normal_quantile(0.975));
  s.q025 = increasing ? lo : hi;
  s.q975 = increasing ? hi : lo;
  s.q50 = g(m);
  // Mode of the fitted density on the transformed scale.
  const double mm = m;
  const double ss = sd;
  auto neg = [&](double t) {
    const double u = (t - mm) / ss;
    return 0.5 * u * u + log_abs_dg(t);
  };
  const auto r = boost::math::tools::brent_find_minima(neg, m - 8.0 * sd, m + 8.0 * sd, 50);
  s.mode = g(r.first);
  return s;
}

}  // namespace

std::vector<HyperSummary> hyper_summaries(const ThetaGrid& grid) {
  std::vector<HyperSummary> out;
  for (std::size_t j = 0; j < grid.names.size(); ++j) {
    const auto& tr = grid.transforms[j];
    HyperSummary h;
    h.name = grid.names[j];
    h.user = transformed_summary(
        grid, static_cast<int>(j), [&](double t) { return tr.backward(t); },
        [&](double t) { return tr.log_jacobian(t); }, true, h.internal_mean, h.internal_sd);
    out.push_back(h);
  }
  return out;
}

LatentSummaries latent_summaries(const ThetaGrid& grid, const ConditionalSet& cond,
                                 const std::vector<std::string>& names, const std::vector<int>& indices) {
  if (grid.points.empty()) throw Error(ErrorCode::EmptyGrid, "no grid points");
  LatentSummaries out;
  out.names = names;
  out.values.resize(indices.size());
  std::vector<double> w;
  for (const auto& p : grid.points) w.push_back(p.weight);
  const int n = static_cast<int>(indices.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int idx = indices[static_cast<std::size_t>(i)];
    std::vector<double> mu(w.size());
    std::vector<double> sd(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      mu[k] = cond.means[k][idx];
      sd[k] = std::sqrt(cond.variances[k][idx]);
    }
    out.values[static_cast<std::size_t>(i)] = mixture_summary(w, mu, sd);
  }
  return out;
}

GenericFit fit_generic(const lgm::HyperModel& model, const model::GridConfig& config,
                       const std::vector<std::string>& latent_names, const std::vector<int>& latent_indices) {
  ExplorationResult ex = explore(model, config);
  GenericFit out;
  out.hyper = hyper_summaries(ex.grid);
  out.latent = latent_summaries(ex.grid, ex.conditionals, latent_names, latent_indices);
  out.grid = std::move(ex.grid);
  return out;
}

// ---------------------------------------------------------------------------

const Summary& FitResult::latent_summary(const std::string& name) const {
  for (std::size_t i = 0; i < latent.names.size(); ++i) {
    if (latent.names[i] == name) return latent.values[i];
  }
  throw Error(ErrorCode::DomainError, "no latent component named " + name);
}

const HyperSummary& FitResult::hyper_summary(const std::string& name) const {
  for (const auto& h : hyper) {
    if (h.name == name) return h;
  }
  for (const auto& h : derived) {
    if (h.name == name) return h;
  }
  throw Error(ErrorCode::UnknownHyperparameter, name);
}

double FitResult::theta_mode_value(const std::string& name) const {
  for (const auto& [n, v] : theta_mode) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::UnknownHyperparameter, name);
}

void latent_report_names(const model::StackedDesign& design, std::vector<std::string>& names,
                         std::vector<int>& indices) {
  using model::Block;
  const auto& lay = design.layout();
  names.clear();
  indices.clear();
  auto push = [&](std::string n, int idx) {
    names.push_back(std::move(n));
    indices.push_back(idx);
  };
  for (int k = 0; k < lay[Block::Alpha].length; ++k) {
    push("alpha[" + std::to_string(k) + "]", lay[Block::Alpha].offset + k);
  }
  const auto& fixed = design.fixed_names();
  for (int j = 0; j < design.p_long(); ++j) push("beta[" + fixed[static_cast<std::size_t>(j)] + "]", lay[Block::Beta].offset + j);
  for (int j = 0; j < design.p_surv(); ++j) {
    push("gamma[" + fixed[static_cast<std::size_t>(design.p_long() + j)] + "]", lay[Block::Gamma].offset + j);
  }
  const auto& ids = design.subject_ids();
  for (int i = 0; i < lay[Block::W].length; ++i) push("w[" + std::to_string(ids[static_cast<std::size_t>(i)]) + "]", lay[Block::W].offset + i);
  for (int i = 0; i < lay[Block::V].length; ++i) push("v[" + std::to_string(ids[static_cast<std::size_t>(i)]) + "]", lay[Block::V].offset + i);
  for (int i = 0; i < lay[Block::M].length; ++i) {
    const int subject = design.data().surv_rows[static_cast<std::size_t>(i)].subject;
    push("m[" + std::to_string(subject) + "]", lay[Block::M].offset + i);
  }
}

namespace {

std::vector<HyperSummary> derived_summaries(const ThetaGrid& grid) {
  std::vector<HyperSummary> out;
  for (std::size_t j = 0; j < grid.names.size(); ++j) {
    const std::string& name = grid.names[j];
    if (!priors::is_precision(name)) continue;
    HyperSummary h;
    h.name = "sigma2_" + name.substr(4);
    h.user = transformed_summary(
        grid, static_cast<int>(j), [](double t) { return std::exp(-t); }, [](double t) { return -t; }, false,
        h.internal_mean, h.internal_sd);
    h.internal_mean = -h.internal_mean;
    out.push_back(h);
  }
  return out;
}

struct PartFit {
  GenericFit fit;
  std::shared_ptr<const model::StackedDesign> design;
  std::unique_ptr<model::JointModel> model;
};

PartFit fit_part(std::shared_ptr<const model::StackedDesign> design) {
  PartFit p;
  p.design = design;
  p.model = std::make_unique<model::JointModel>(design);
  std::vector<std::string> names;
  std::vector<int> indices;
  latent_report_names(*design, names, indices);
  p.fit = fit_generic(*p.model, design->config().grid, names, indices);
  return p;
}

HyperSummary fixed_summary(const std::string& name, double value) {
  HyperSummary h;
  h.name = name;
  h.fixed = true;
  h.user = {value, 0.0, value, value, value, value};
  return h;
}

}  // namespace

FitResult fit(std::shared_ptr<const model::StackedDesign> design) {
  const model::JointModel joint(design);
  FitResult out;
  out.config = design->config();
  out.knots = design->knots();
  out.fixed_names = design->fixed_names();
  out.subject_ids = design->subject_ids();
  std::vector<std::string> names;
  std::vector<int> indices;
  latent_report_names(*design, names, indices);

  std::vector<PartFit> parts;
  if (joint.separable()) {
    out.separated = true;
    const auto sd = model::split(*design);
    parts.push_back(fit_part(sd.longitudinal));
    parts.push_back(fit_part(sd.survival));
  } else {
    parts.push_back(fit_part(design));
  }

  // Merge latent summaries in the joint naming order.
  std::map<std::string, Summary> by_name;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.fit.latent.names.size(); ++i) by_name[p.fit.latent.names[i]] = p.fit.latent.values[i];
  }
  out.latent.names = names;
  for (const auto& n : names) out.latent.values.push_back(by_name.at(n));

  const auto& space = joint.space();
  const model::HyperParams fixed_values = space.to_params(Eigen::VectorXd::Zero(space.dim()));
  std::map<std::string, HyperSummary> hyper_by_name;
  std::map<std::string, double> mode_by_name;
  out.log_marginal_likelihood = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    for (const auto& h : p.fit.hyper) hyper_by_name[h.name] = h;
    for (const auto& h : derived_summaries(p.fit.grid)) out.derived.push_back(h);
    const model::HyperParams m = p.model->space().to_params(p.fit.grid.mode);
    for (const auto& n : p.model->space().active_names()) mode_by_name[n] = m.get(n);
    out.log_marginal_likelihood += p.fit.grid.log_evidence;
    const std::string label = parts.size() == 1 ? "joint" : (k == 0 ? "longitudinal" : "survival");
    out.parts.push_back({label, p.fit.grid});
  }
  for (const auto& n : space.active_names()) {
    if (auto it = hyper_by_name.find(n); it != hyper_by_name.end()) {
      out.hyper.push_back(it->second);
    } else {
      out.hyper.push_back(fixed_summary(n, fixed_values.get(n)));
    }
    const auto mit = mode_by_name.find(n);
    out.theta_mode.emplace_back(n, mit != mode_by_name.end() ? mit->second : fixed_values.get(n));
  }

  if (design->has_long()) {
    const int a0 = 0;
    for (std::size_t k = 0; k < design->knots().size(); ++k) {
      out.spline.push_back({design->knots()[k], out.latent.values[static_cast<std::size_t>(a0) + k]});
    }
  }
  return out;
}

}  // namespace jmlgm::inference
