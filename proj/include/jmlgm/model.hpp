#pragma once

// Joint longitudinal/survival model as a latent Gaussian model: data
// stacking, latent-field layout, the hyperparameter-dependent mapping from
// latent blocks to linear predictors, and the joint log-density.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jmlgm/gmrf.hpp"
#include "jmlgm/lgm.hpp"
#include "jmlgm/priors.hpp"

namespace jmlgm::model {

struct LongRow {
  int subject;
  double time;
  double y;
  std::vector<double> x;
};

struct SurvRow {
  int subject;
  double time;
  int event;  // 1 = event observed, 0 = right-censored
  std::vector<double> z;
};

struct JointData {
  std::vector<LongRow> long_rows;
  std::vector<SurvRow> surv_rows;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
};

/// How the shared effects enter the hazard: nu w (eq4), nu v s (eq5),
/// nu (w + v s) (eq6), nu1 w + nu2 v s (eq7).
enum class Association { InterceptOnly, SlopeOnly, IntSlopeShared, IntSlopeSeparate };
enum class Baseline { Weibull, Exponential };
/// Random-effect structure of the longitudinal predictor: w + v t, or w alone.
enum class RandomEffects { IntSlope, Intercept };

Association parse_association(const std::string& key);  // "eq4".."eq7"
std::string association_key(Association a);
int nu_arity(Association a);

struct SplineConfig {
  int n_knots = 25;
  bool scaled = true;
  std::vector<double> knots;  // explicit placement; overrides n_knots when non-empty
};

struct GridConfig {
  double step = 0.75;          // dense-grid spacing in standardized units
  double drop = 6.0;           // log-density threshold below the mode
  int max_dense_dim = 4;       // above this, central composite design
  double ccd_f0 = 1.1;
  double hessian_step = 1e-3;
  int max_evaluations = 300;
  double simplex_tolerance = 1e-6;
  int threads = 0;             // 0 = OpenMP default
  bool parallel = true;
};

struct ModelConfig {
  Association association = Association::IntSlopeShared;
  Baseline baseline = Baseline::Weibull;
  RandomEffects random_effects = RandomEffects::IntSlope;
  SplineConfig spline;
  bool frailty = false;
  bool long_intercept = false;
  bool surv_intercept = true;
  std::map<std::string, priors::PriorSpec> priors;
  GridConfig grid;
};

/// Precision of the Gaussian link eta = A x + e that places the linear
/// predictors in the latent field.
inline constexpr double kPredictorPrecision = 1e6;
/// Precision of the vague Gaussian prior on fixed effects.
inline constexpr double kFixedEffectPrecision = 1e-3;
/// Precision given to the constant-and-linear null space of the RW2 prior.
inline constexpr double kSplineNullPrecision = 1e-3;

enum class Block { Alpha, Beta, Gamma, W, V, M, EtaL, EtaS };
inline constexpr int kBlockCount = 8;
const char* block_name(Block b);

struct BlockRange {
  Block block;
  int offset;
  int length;
};

class LatentLayout {
 public:
  LatentLayout() = default;
  LatentLayout(int n_knots, int p_long, int p_surv, int n_w, int n_v, int n_m, int n_long, int n_surv);

  const BlockRange& operator[](Block b) const { return blocks_[static_cast<int>(b)]; }
  const std::array<BlockRange, kBlockCount>& blocks() const { return blocks_; }
  int dim() const { return dim_; }
  /// Index of the first predictor coordinate; predictors occupy [eta_begin, dim).
  int eta_begin() const { return (*this)[Block::EtaL].offset; }

 private:
  std::array<BlockRange, kBlockCount> blocks_{};
  int dim_ = 0;
};

/// Hyperparameters on the user scale. Every hyperparameter of the joint model
/// has exactly one field; `nu1` doubles as the single nu of eq4-eq6.
struct HyperParams {
  double tau_eps = 1.0;
  double kappa = 1.0;
  double tau_alpha = 1.0;
  double tau_w = 1.0;
  double tau_v = 1.0;
  double rho = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double tau_m = 1.0;

  double get(const std::string& name) const;
  void set(const std::string& name, double value);
};

/// (weight on w, weight on v) in the survival predictor at time s.
std::pair<double, double> association_weights(Association a, const std::vector<double>& nu, double s);

enum class RowKind { Longitudinal, Survival };

/// One row of the stacked response (N_L longitudinal rows, then N_S survival
/// rows). Fields that do not apply to the row kind hold missing markers.
struct StackedRow {
  RowKind kind;
  int subject;                    // dense subject index
  double time;                    // t (longitudinal) or s (survival)
  double y;                       // NaN on survival rows
  int event;                      // -1 on longitudinal rows
  std::optional<int> spline_knot; // left bracketing knot; nullopt on survival rows
  double spline_weight;           // weight of the left knot (right gets 1 - w)
  std::optional<int> shared_effect; // subject index for w/v; present on every row
};

class StackedDesign {
 public:
  StackedDesign(const JointData& data, ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const std::vector<StackedRow>& rows() const { return rows_; }
  /// Fixed-effect design, (N_L + N_S) x (p_L + p_S): (X, 0) over (0, Z).
  const Eigen::MatrixXd& fixed_design() const { return fixed_; }
  const std::vector<std::string>& fixed_names() const { return fixed_names_; }
  int p_long() const { return p_long_; }
  int p_surv() const { return p_surv_; }
  int n_long() const { return n_long_; }
  int n_surv() const { return n_surv_; }
  int n_subjects() const { return static_cast<int>(subject_ids_.size()); }
  const std::vector<int>& subject_ids() const { return subject_ids_; }
  int subject_index(int id) const;  // throws UnknownSubject
  const std::vector<double>& knots() const { return knots_; }
  const LatentLayout& layout() const { return layout_; }
  const JointData& data() const { return data_; }

  bool has_long() const { return n_long_ > 0; }
  bool has_surv() const { return n_surv_ > 0; }
  bool has_slope() const { return has_long() && config_.random_effects == RandomEffects::IntSlope; }

  /// Unit-precision RW2 structure (scaled if configured); the spline prior
  /// precision is tau_alpha * structure + null-space term.
  const gmrf::SparseSymMatrix& spline_structure() const { return *spline_structure_; }
  /// kSplineNullPrecision times the projector onto span{1, knots}.
  const gmrf::SparseSymMatrix& spline_null() const { return *spline_null_; }
  /// log |structure + null| (the spline log-determinant at tau_alpha = 1).
  double spline_base_logdet() const { return spline_base_logdet_; }
  int spline_rank() const { return static_cast<int>(knots_.size()) - 2; }

  /// Spline interpolation (left knot, left weight) at time t.
  std::pair<int, double> interpolate(double t) const;

  /// Inverse of stacking: reconstructs the original rows.
  JointData unstack() const;

 private:
  JointData data_;
  ModelConfig config_;
  std::vector<StackedRow> rows_;
  Eigen::MatrixXd fixed_;
  std::vector<std::string> fixed_names_;
  int p_long_ = 0;
  int p_surv_ = 0;
  int n_long_ = 0;
  int n_surv_ = 0;
  std::vector<int> subject_ids_;
  std::map<int, int> subject_lookup_;
  std::vector<double> knots_;
  std::shared_ptr<const gmrf::SparseSymMatrix> spline_structure_;
  std::shared_ptr<const gmrf::SparseSymMatrix> spline_null_;
  double spline_base_logdet_ = 0.0;
  LatentLayout layout_;
};

/// Predictor-by-latent mapping A(theta): rows are the stacked rows, columns
/// the non-predictor blocks of the latent field (the first eta_begin()
/// coordinates). Entries that vanish for the given theta are stored
/// explicitly so the pattern does not depend on theta.
gmrf::SparseMatrix build_mapping(const StackedDesign& design, const HyperParams& theta);

/// Block-diagonal prior precision of the non-predictor latent blocks, stored
/// in a matrix of the full layout dimension (predictor rows left empty).
struct RestPrior {
  gmrf::SparseSymMatrix precision;
  double log_det;
};
RestPrior rest_prior(const StackedDesign& design, const HyperParams& theta);

/// Parameter space of the joint model: which hyperparameters are active,
/// which are free, their transforms and priors.
class HyperSpace {
 public:
  explicit HyperSpace(const StackedDesign& design);

  const std::vector<std::string>& active_names() const { return active_; }
  const std::vector<std::string>& free_names() const { return free_; }
  const std::vector<priors::HyperTransform>& transforms() const { return transforms_; }
  const std::vector<priors::PriorSpec>& free_priors() const { return priors_; }
  int dim() const { return static_cast<int>(free_.size()); }

  HyperParams to_params(const Eigen::VectorXd& internal) const;
  Eigen::VectorXd to_internal(const HyperParams& params) const;
  double log_prior(const Eigen::VectorXd& internal) const;
  Eigen::VectorXd start() const;
  /// Validates the user-scale domain of every active hyperparameter.
  void check_domain(const HyperParams& params) const;
  std::vector<double> nu(const HyperParams& p) const;

 private:
  const StackedDesign* design_;
  std::vector<std::string> active_;
  std::vector<std::string> free_;
  std::vector<priors::HyperTransform> transforms_;
  std::vector<priors::PriorSpec> priors_;
  HyperParams fixed_values_;
};

/// How the predictors enter the latent field: as latent coordinates linked
/// by eta = A x + e with precision kPredictorPrecision, or exactly (eta = A x,
/// predictors eliminated).
enum class PredictorLink { Augmented, Exact };

/// The joint model as a family of latent Gaussian models in theta.
class JointModel : public lgm::HyperModel {
 public:
  explicit JointModel(std::shared_ptr<const StackedDesign> design,
                      PredictorLink link = PredictorLink::Augmented);

  const StackedDesign& design() const { return *design_; }
  std::shared_ptr<const StackedDesign> design_ptr() const { return design_; }
  const HyperSpace& space() const { return space_; }

  int theta_dim() const override { return space_.dim(); }
  std::vector<std::string> theta_names() const override { return space_.free_names(); }
  std::vector<priors::HyperTransform> theta_transforms() const override { return space_.transforms(); }
  Eigen::VectorXd theta_start() const override { return space_.start(); }
  double log_prior_theta(const Eigen::VectorXd& theta) const override;
  lgm::LatentGaussianModel instance(const Eigen::VectorXd& theta) const override;
  int latent_dim() const override;
  PredictorLink link() const { return link_; }

  lgm::LatentGaussianModel instance(const HyperParams& params) const;

  /// True when no free or fixed association couples the two submodels.
  bool separable() const;

 private:
  std::shared_ptr<const StackedDesign> design_;
  HyperSpace space_;
  PredictorLink link_;
  gmrf::Permutation ordering_;
};

/// The three addends of the log joint posterior at (x, theta); x is the full
/// latent field of `model` (with predictors for the augmented link).
lgm::DensityParts joint_logdensity_parts(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                         const JointModel& model);

/// Sub-designs for separate longitudinal-only and survival-only fits.
struct SplitDesign {
  std::shared_ptr<const StackedDesign> longitudinal;
  std::shared_ptr<const StackedDesign> survival;
};
SplitDesign split(const StackedDesign& design);

/// Default knot rule: n equally spaced knots over [min t, max t].
std::vector<double> default_knots(const JointData& data, int n_knots);

}  // namespace jmlgm::model
