#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace jmlgm::inference {

template <typename F>
NelderMeadResult nelder_mead_maximize(F&& f, const Eigen::VectorXd& start, double initial_step,
                                      double tolerance, int max_evaluations) {
  const auto n = start.size();
  NelderMeadResult out;
  // Minimize g = -f; non-finite values are worst.
  auto g = [&](const Eigen::VectorXd& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  if (n == 0) {
    out.argmax = start;
    out.value = -g(start);
    out.converged = true;
    return out;
  }

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  values[0] = g(start);
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[static_cast<std::size_t>(i + 1)][i] += initial_step;
    values[static_cast<std::size_t>(i + 1)] = g(simplex[static_cast<std::size_t>(i + 1)]);
  }
  std::vector<std::size_t> order(simplex.size());

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    const double spread = values[worst] - values[best];
    if (std::isfinite(values[best]) && spread < tolerance) {
      out.converged = true;
      break;
    }
    if (out.evaluations >= max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < simplex.size(); ++k) {
      if (k != worst) centroid += simplex[k];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = g(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = g(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = g(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < simplex.size(); ++k) {
      if (k == best) continue;
      simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
      values[k] = g(simplex[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  out.argmax = simplex[best];
  out.value = -values[best];
  return out;
}

template <typename F>
Eigen::MatrixXd fd_hessian(F&& f, const Eigen::VectorXd& x, double f_at_x, double h, Eigen::VectorXd* gradient) {
  const auto n = x.size();
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd plus(n);
  Eigen::VectorXd minus(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    plus[i] = f(xp);
    minus[i] = f(xm);
    hess(i, i) = (plus[i] - 2.0 * f_at_x + minus[i]) / (h * h);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd x_pp = x;
      Eigen::VectorXd x_pm = x;
      Eigen::VectorXd x_mp = x;
      Eigen::VectorXd x_mm = x;
      x_pp[i] += h; x_pp[j] += h;
      x_pm[i] += h; x_pm[j] -= h;
      x_mp[i] -= h; x_mp[j] += h;
      x_mm[i] -= h; x_mm[j] -= h;
      hess(i, j) = hess(j, i) = (f(x_pp) - f(x_pm) - f(x_mp) + f(x_mm)) / (4.0 * h * h);
    }
  }
  if (gradient) *gradient = (plus - minus) / (2.0 * h);
  return hess;
}

}  // namespace jmlgm::inference
