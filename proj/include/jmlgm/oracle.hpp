#pragma once

// Blockwise random-walk Metropolis over (x, theta), used to check the
// Laplace pipeline on small instances. Besides one random-walk block per
// latent block and one for theta, each sweep makes a joint move: a random
// walk on theta with x redrawn from the Gaussian approximation at the
// proposed theta, corrected by the Metropolis-Hastings ratio.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "jmlgm/lgm.hpp"
#include "jmlgm/model.hpp"

namespace jmlgm::oracle {

inline constexpr int kMaxLatentDim = 2000;

struct McmcConfig {
  int iterations = 200000;
  int burn_in = 50000;
  int thinning = 10;
  /// Initial step scales, one per move (latent blocks, theta, then the joint
  /// theta+x move when both are present). Empty means 2.38 / sqrt(size).
  std::vector<double> scales;
  std::uint64_t seed = 1;
  double target_acceptance = 0.3;

  void validate() const;
};

/// A contiguous run of latent coordinates updated together.
struct LatentBlock {
  std::string name;
  int offset;
  int length;
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
  double mcse = 0.0;
};

struct McmcResult {
  std::vector<std::string> block_names;  // latent blocks, "theta", "theta+x"
  std::vector<double> acceptance;        // post burn-in, per block
  std::vector<double> scales;            // frozen scales, per block
  Eigen::MatrixXd theta_samples;         // thinned draws, internal scale
  Eigen::MatrixXd latent_samples;        // thinned draws of the full latent field
  std::vector<ParamSummary> theta_internal;
  std::vector<ParamSummary> theta_user;
  std::vector<ParamSummary> latent;      // only for the requested names

  const ParamSummary& find(const std::vector<ParamSummary>& set, const std::string& name) const;
};

/// Effective sample size by Geyer's initial positive sequence.
double effective_sample_size(const Eigen::VectorXd& chain);
ParamSummary summarize_chain(const std::string& name, const Eigen::VectorXd& chain);

/// Samples pi(theta) pi(x | theta) pi(y | x, theta) for a model with an exact
/// predictor link. `latent_names`/`latent_indices` select the latent
/// coordinates to summarize.
McmcResult run_mcmc(const lgm::HyperModel& model, const std::vector<LatentBlock>& blocks,
                    const McmcConfig& config, const std::vector<std::string>& latent_names = {},
                    const std::vector<int>& latent_indices = {});

/// Joint-model sampler: one block per non-empty latent block of the design,
/// one for theta. Latent summaries use the reporting names of the fit.
McmcResult run_mcmc(std::shared_ptr<const model::StackedDesign> design, const McmcConfig& config);

}  // namespace jmlgm::oracle
