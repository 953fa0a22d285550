#include "jmlgm/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include "jmlgm/errors.hpp"

namespace jmlgm::sim {

namespace {

constexpr double kBracketLow = 1e-10;
constexpr double kHazardTolerance = 1e-10;

std::mt19937_64 subject_stream(std::uint64_t seed, int subject) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(subject), 0x6a6d6c67u};
  return std::mt19937_64(seq);
}

void validate(const Scenario& s) {
  if (s.n_subjects < 1) throw Error(ErrorCode::InvalidConfig, "n_subjects must be >= 1");
  if (!(s.horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "censoring horizon must be > 0");
  if (!(s.kappa > 0.0)) throw Error(ErrorCode::NonPositiveShape, "kappa must be > 0");
  if (!(s.tau_eps > 0.0)) throw Error(ErrorCode::NonPositivePrecision, "tau_eps must be > 0");
  if (!(s.sigma_w > 0.0) || !(s.sigma_v > 0.0)) throw Error(ErrorCode::InvalidConfig, "random-effect SDs must be > 0");
  if (!(std::abs(s.rho) < 1.0)) throw Error(ErrorCode::InvalidRho, "|rho| must be < 1");
  if (static_cast<int>(s.nu.size()) != model::nu_arity(s.association)) {
    throw Error(ErrorCode::WrongNuArity, "association needs " + std::to_string(model::nu_arity(s.association)) +
                                             " parameter(s)");
  }
  if (s.random_effects == model::RandomEffects::Intercept && s.association != model::Association::InterceptOnly) {
    throw Error(ErrorCode::InvalidConfig, "intercept-only random effects require association eq4");
  }
}

/// Inverse of the cumulative hazard by bisection on [1e-10, 10 s^X]. Returns
/// +inf when the hazard never accumulates to the target within the bracket;
/// such a draw lies beyond the horizon and is censored.
double invert_hazard(double kappa, double a, double b, double target, double horizon) {
  double lo = kBracketLow;
  double hi = 10.0 * horizon;
  if (cumulative_hazard(kappa, a, b, hi) < target) return std::numeric_limits<double>::infinity();
  if (cumulative_hazard(kappa, a, b, lo) > target) return lo;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = cumulative_hazard(kappa, a, b, mid);
    if (std::abs(h - target) < kHazardTolerance) return mid;
    (h < target ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * hi) return mid;
  }
  throw Error(ErrorCode::BisectionFailed, "bisection did not reach the tolerance");
}

}  // namespace

std::vector<double> default_schedule() {
  std::vector<double> t(9);
  for (int i = 0; i < 9; ++i) t[i] = 0.5 * i;
  return t;
}

double cumulative_hazard(double kappa, double a, double b, double s) {
  if (!(s > 0.0)) return 0.0;
  if (b == 0.0) return std::exp(kappa * std::log(s) + a);
  // int_0^1 kappa x^(kappa-1) e^(z x) dx = 1F1(kappa; kappa + 1; z).
  return std::exp(kappa * std::log(s) + a) * boost::math::hypergeometric_1F1(kappa, kappa + 1.0, b * s);
}

Simulated simulate_joint(const Scenario& sc) {
  validate(sc);
  const auto schedule = sc.schedule.empty() ? default_schedule() : sc.schedule;
  const bool slope = sc.random_effects == model::RandomEffects::IntSlope;
  Simulated out;
  for (std::size_t j = 0; j < sc.beta.size(); ++j) out.data.x_names.push_back("x" + std::to_string(j + 1));
  for (std::size_t j = 0; j < sc.gamma.size(); ++j) out.data.z_names.push_back("z" + std::to_string(j + 1));

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double noise_sd = 1.0 / std::sqrt(sc.tau_eps);

  for (int i = 0; i < sc.n_subjects; ++i) {
    const int id = i + 1;
    auto rng = subject_stream(sc.seed, id);
    const double e1 = normal(rng);
    const double e2 = normal(rng);
    const double w = sc.sigma_w * e1;
    const double v = slope ? sc.sigma_v * (sc.rho * e1 + std::sqrt(1.0 - sc.rho * sc.rho) * e2) : 0.0;
    std::vector<double> z(sc.gamma.size());
    double a = sc.surv_intercept;
    for (std::size_t j = 0; j < z.size(); ++j) {
      z[j] = normal(rng);
      a += sc.gamma[j] * z[j];
    }
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    const double target = -std::log(u);

    // Weights at s = 1 give the linear-in-s structure: ww + (wv) s.
    const auto [ww, wv1] = model::association_weights(sc.association, sc.nu, 1.0);
    const double a_total = a + ww * w;
    const double b_total = slope ? wv1 * v : 0.0;

    double s_star = 0.0;
    double residual = 0.0;
    if (sc.mode == HazardMode::ExactTimeVarying && b_total != 0.0) {
      s_star = invert_hazard(sc.kappa, a_total, b_total, target, sc.horizon);
      if (std::isfinite(s_star)) residual = cumulative_hazard(sc.kappa, a_total, b_total, s_star) - target;
    } else {
      // Predictor frozen at the event time; one fixed-point sweep.
      auto draw = [&](double eta) { return std::pow(target * std::exp(-eta), 1.0 / sc.kappa); };
      const double s0 = draw(a_total);
      s_star = b_total != 0.0 ? draw(a_total + b_total * s0) : s0;
      residual = s_star - draw(a_total + b_total * s_star);
    }
    const double s_obs = std::min(s_star, sc.horizon);
    const int event = s_star <= sc.horizon ? 1 : 0;
    out.data.surv_rows.push_back({id, s_obs, event, z});

    for (double t : schedule) {
      if (t > s_obs) break;
      model::LongRow row{id, t, 0.0, std::vector<double>(sc.beta.size())};
      double eta = sc.trajectory(t) + w + (slope ? v * t : 0.0);
      for (std::size_t j = 0; j < sc.beta.size(); ++j) {
        row.x[j] = normal(rng);
        eta += sc.beta[j] * row.x[j];
      }
      row.y = eta + noise_sd * normal(rng);
      out.data.long_rows.push_back(std::move(row));
    }
    out.subjects.push_back({id, w, v, s_star, residual});
  }
  return out;
}

}  // namespace jmlgm::sim
