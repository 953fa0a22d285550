#include "jmlgm/gmrf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "jmlgm/errors.hpp"

namespace jmlgm::gmrf {

SparseSymMatrix::SparseSymMatrix(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::DomainError, "matrix dimension must be >= 1");
}

void SparseSymMatrix::add(int row, int col, double value) {
  if (row < 0 || col < 0 || row >= dim_ || col >= dim_) {
    throw Error(ErrorCode::DomainError, "index (" + std::to_string(row) + ", " +
                                            std::to_string(col) + ") outside dimension " +
                                            std::to_string(dim_));
  }
  if (row < col) std::swap(row, col);
  entries_.push_back({row, col, value});
}

void SparseSymMatrix::add_block(const SparseSymMatrix& block, int offset, double scale) {
  for (const auto& e : block.entries_) add(e.row + offset, e.col + offset, scale * e.value);
}

SparseSymMatrix SparseSymMatrix::scaled(double factor) const {
  SparseSymMatrix out(dim_);
  out.entries_ = entries_;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

SparseMatrix SparseSymMatrix::lower() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(entries_.size());
  for (const auto& e : entries_) t.emplace_back(e.row, e.col, e.value);
  SparseMatrix m(dim_, dim_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix SparseSymMatrix::full() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    t.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col) t.emplace_back(e.col, e.row, e.value);
  }
  SparseMatrix m(dim_, dim_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::MatrixXd SparseSymMatrix::dense() const { return Eigen::MatrixXd(full()); }

Eigen::VectorXd SparseSymMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim_);
  for (const auto& e : entries_) {
    y[e.row] += e.value * x[e.col];
    if (e.row != e.col) y[e.col] += e.value * x[e.row];
  }
  return y;
}

double SparseSymMatrix::quadratic_form(const Eigen::VectorXd& x) const {
  double acc = 0.0;
  for (const auto& e : entries_) {
    const double term = e.value * x[e.row] * x[e.col];
    acc += (e.row == e.col) ? term : 2.0 * term;
  }
  return acc;
}

Permutation amd_ordering(const SparseMatrix& lower) {
  SparseMatrix sym = lower.selfadjointView<Eigen::Lower>();
  Permutation pinv;
  Eigen::AMDOrdering<int>()(sym, pinv);
  return pinv.inverse();
}

Factorization::Factorization(const SparseMatrix& lower, const Permutation* ordering)
    : dim_(static_cast<int>(lower.rows())) {
  double max_diag = 0.0;
  for (int k = 0; k < lower.outerSize(); ++k) {
    max_diag = std::max(max_diag, std::abs(lower.coeff(k, k)));
  }
  perm_ = ordering ? *ordering : amd_ordering(lower);
  SparseMatrix permuted(dim_, dim_);
  permuted.selfadjointView<Eigen::Lower>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
  llt_.compute(permuted);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "sparse Cholesky failed (non-positive pivot)");
  }
  const SparseMatrix& l = llt_.matrixL().nestedExpression();
  const double floor = kPivotTolerance * max_diag;
  for (int j = 0; j < dim_; ++j) {
    const double pivot = l.valuePtr()[l.outerIndexPtr()[j]];
    if (!(pivot * pivot > floor)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " below tolerance");
    }
    log_det_ += 2.0 * std::log(pivot);
  }
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd pb = perm_ * b;
  Eigen::VectorXd y = llt_.solve(pb);
  return perm_.inverse() * y;
}

Eigen::VectorXd Factorization::sample_from_standard(const Eigen::VectorXd& z) const {
  // P M P' = L L'  =>  x = P' L'^{-1} z has covariance M^{-1}.
  Eigen::VectorXd y = llt_.matrixU().solve(z);
  return perm_.inverse() * y;
}

Eigen::VectorXd Factorization::marginal_variances() const {
  const SparseMatrix& l = llt_.matrixL().nestedExpression();
  const int* outer = l.outerIndexPtr();
  const int* inner = l.innerIndexPtr();
  const double* val = l.valuePtr();
  std::vector<double> sigma(static_cast<std::size_t>(l.nonZeros()), 0.0);

  // Column c holds rows sorted ascending with the diagonal first.
  auto lookup = [&](int a, int b) -> double {
    const int col = std::min(a, b);
    const int row = std::max(a, b);
    const int* first = inner + outer[col];
    const int* last = inner + outer[col + 1];
    const int* it = std::lower_bound(first, last, row);
    return sigma[static_cast<std::size_t>(it - inner)];
  };

  for (int i = dim_ - 1; i >= 0; --i) {
    const int begin = outer[i];
    const int end = outer[i + 1];
    const double lii = val[begin];
    // Off-diagonal entries Sigma(j, i), j > i, from the largest row down.
    for (int p = end - 1; p > begin; --p) {
      const int j = inner[p];
      double acc = 0.0;
      for (int q = begin + 1; q < end; ++q) acc += val[q] * lookup(inner[q], j);
      sigma[static_cast<std::size_t>(p)] = -acc / lii;
    }
    double acc = 0.0;
    for (int q = begin + 1; q < end; ++q) acc += val[q] * sigma[static_cast<std::size_t>(q)];
    sigma[static_cast<std::size_t>(begin)] = 1.0 / (lii * lii) - acc / lii;
  }

  Eigen::VectorXd permuted(dim_);
  for (int i = 0; i < dim_; ++i) permuted[i] = sigma[static_cast<std::size_t>(outer[i])];
  return perm_.inverse() * permuted;
}

Factorization cholesky(const SparseSymMatrix& m) { return Factorization(m.lower()); }

SparseSymMatrix rw2_precision(const Rw2Spec& spec) {
  const auto& t = spec.knots;
  const int n = static_cast<int>(t.size());
  if (n < 3) throw Error(ErrorCode::TooFewKnots, "RW2 needs at least 3 knots, got " + std::to_string(n));
  for (int i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) {
      throw Error(ErrorCode::NonIncreasingKnots, "knot " + std::to_string(i) + " is not increasing");
    }
  }
  if (!(spec.tau_alpha > 0.0)) throw Error(ErrorCode::NonPositivePrecision, "tau_alpha must be > 0");

  SparseSymMatrix q(n);
  q.reserve(static_cast<std::size_t>(6 * n));
  const double d0 = t[1] - t[0];
  bool regular = true;
  for (int i = 1; i < n; ++i) regular = regular && std::abs((t[i] - t[i - 1]) - d0) <= 1e-12 * d0;

  for (int i = 1; i + 1 < n; ++i) {
    double h[3];
    double weight;
    if (regular) {
      h[0] = 1.0;
      h[1] = -2.0;
      h[2] = 1.0;
      weight = 1.0 / (d0 * d0 * d0);
    } else {
      const double dl = t[i] - t[i - 1];
      const double dr = t[i + 1] - t[i];
      h[0] = 1.0 / dl;
      h[1] = -(1.0 / dl + 1.0 / dr);
      h[2] = 1.0 / dr;
      weight = 2.0 / (dl + dr);
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b <= a; ++b) q.add(i - 1 + a, i - 1 + b, weight * h[a] * h[b]);
    }
  }
  // Collapse duplicates so downstream consumers see one entry per coordinate.
  SparseMatrix lower = q.lower();
  SparseSymMatrix out(n);
  for (int k = 0; k < lower.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(lower, k); it; ++it) out.add(it.row(), it.col(), it.value());
  }
  if (spec.scaled) out = scale_rw2(out).precision;
  return out.scaled(spec.tau_alpha);
}

ScaledPrecision scale_rw2(const SparseSymMatrix& q) {
  const int n = q.dim();
  if (n < 3) throw Error(ErrorCode::TooFewKnots, "RW2 needs at least 3 knots");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.dense());
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double tol = 1e-9 * lambda[n - 1];
  if (!(lambda[1] < tol) || !(lambda[2] > tol)) {
    throw Error(ErrorCode::DomainError, "input is not a rank n-2 RW2 precision");
  }
  // Generalized inverse on the range of q: drop the two null directions.
  const Eigen::MatrixXd v = eig.eigenvectors().rightCols(n - 2);
  const Eigen::VectorXd inv = lambda.tail(n - 2).cwiseInverse();
  double log_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    log_sum += std::log((v.row(i).array().square() * inv.transpose().array()).sum());
  }
  const double factor = std::exp(log_sum / n);
  return {q.scaled(factor), factor};
}

Eigen::Matrix2d intslope_precision_2x2(const IntSlopeSpec& spec) {
  if (!(std::abs(spec.rho) < 1.0)) throw Error(ErrorCode::InvalidRho, "|rho| must be < 1");
  if (!(spec.sigma_w > 0.0) || !(spec.sigma_v > 0.0)) {
    throw Error(ErrorCode::NonPositivePrecision, "random-effect standard deviations must be > 0");
  }
  const double one_minus = 1.0 - spec.rho * spec.rho;
  Eigen::Matrix2d p;
  p(0, 0) = 1.0 / (spec.sigma_w * spec.sigma_w * one_minus);
  p(1, 1) = 1.0 / (spec.sigma_v * spec.sigma_v * one_minus);
  p(0, 1) = p(1, 0) = -spec.rho / (spec.sigma_w * spec.sigma_v * one_minus);
  return p;
}

SparseSymMatrix intslope_precision(const IntSlopeSpec& spec, int n_subjects) {
  const Eigen::Matrix2d p = intslope_precision_2x2(spec);
  SparseSymMatrix out(2 * n_subjects);
  out.reserve(static_cast<std::size_t>(3 * n_subjects));
  for (int i = 0; i < n_subjects; ++i) {
    out.add(2 * i, 2 * i, p(0, 0));
    out.add(2 * i + 1, 2 * i, p(1, 0));
    out.add(2 * i + 1, 2 * i + 1, p(1, 1));
  }
  return out;
}

}  // namespace jmlgm::gmrf
