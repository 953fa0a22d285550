#pragma once

// Sparse symmetric precision matrices, their Cholesky factorization, and the
// builders for the structured random effects of the latent field.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <span>
#include <vector>

namespace jmlgm::gmrf {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

/// Coordinate-list entry of the lower triangle (row >= col).
struct Entry {
  int row;
  int col;
  double value;
};

/// Symmetric matrix stored as a lower-triangle coordinate list. Duplicate
/// coordinates accumulate. The upper triangle is implied by mirroring.
class SparseSymMatrix {
 public:
  explicit SparseSymMatrix(int dim);

  int dim() const { return dim_; }
  std::span<const Entry> entries() const { return entries_; }

  /// Adds `value` at (row, col); the pair is normalized to the lower triangle.
  void add(int row, int col, double value);
  /// Adds every entry of `block` shifted by `offset` on both axes.
  void add_block(const SparseSymMatrix& block, int offset, double scale = 1.0);
  void reserve(std::size_t n) { entries_.reserve(n); }

  SparseSymMatrix scaled(double factor) const;

  SparseMatrix lower() const;
  SparseMatrix full() const;
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  double quadratic_form(const Eigen::VectorXd& x) const;

 private:
  int dim_;
  std::vector<Entry> entries_;
};

/// Sparse Cholesky factor P M P' = L L' with fill-reducing ordering.
/// Immutable after construction; safe to share across threads.
class Factorization {
 public:
  /// Relative pivot tolerance: a squared pivot below this times the largest
  /// diagonal entry of the input is treated as rank deficiency.
  static constexpr double kPivotTolerance = 1e-12;

  /// `lower` holds the lower triangle. Without an explicit `ordering`, an
  /// AMD ordering is computed; pass one to reuse it across matrices that
  /// share a sparsity pattern.
  explicit Factorization(const SparseMatrix& lower, const Permutation* ordering = nullptr);

  int dim() const { return dim_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  double log_determinant() const { return log_det_; }
  /// diag(M^{-1}) by Takahashi recursion over the filled pattern of L.
  Eigen::VectorXd marginal_variances() const;
  /// x = L'^{-1} z in the original ordering, so x ~ N(0, M^{-1}) for z ~ N(0, I).
  Eigen::VectorXd sample_from_standard(const Eigen::VectorXd& z) const;

 private:
  int dim_;
  double log_det_ = 0.0;
  Permutation perm_;  // factor is of P M P'
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>> llt_;
};

/// Fill-reducing ordering P (factorize P M P') for the pattern of `lower`.
Permutation amd_ordering(const SparseMatrix& lower);

Factorization cholesky(const SparseSymMatrix& m);

struct Rw2Spec {
  std::vector<double> knots;
  bool scaled = true;
  double tau_alpha = 1.0;
};

/// Second-order random walk precision on (possibly irregular) knots.
/// Each interior knot contributes one second-difference row
///   h_i = (1/d_{i-1}, -(1/d_{i-1} + 1/d_i), 1/d_i)
/// with weight 2 / (d_{i-1} + d_i). For unit spacing this is D'D.
/// Scaling (if requested) is applied before multiplying by tau_alpha.
SparseSymMatrix rw2_precision(const Rw2Spec& spec);

struct ScaledPrecision {
  SparseSymMatrix precision;
  double factor;  // precision = factor * input
};

/// Rescales an RW2 precision so that the geometric mean of the marginal
/// variances of its generalized inverse (null space removed) is one.
ScaledPrecision scale_rw2(const SparseSymMatrix& q);

struct IntSlopeSpec {
  double sigma_w;
  double sigma_v;
  double rho;
};

/// Inverse of [[sw^2, rho sw sv], [rho sw sv, sv^2]], block-diagonal over
/// `n_subjects` with subject i occupying rows (2i, 2i+1).
SparseSymMatrix intslope_precision(const IntSlopeSpec& spec, int n_subjects = 1);

Eigen::Matrix2d intslope_precision_2x2(const IntSlopeSpec& spec);

}  // namespace jmlgm::gmrf
