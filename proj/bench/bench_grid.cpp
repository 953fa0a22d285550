#include <benchmark/benchmark.h>

#include <random>

#include "jmlgm/inference.hpp"
#include "jmlgm/model.hpp"
#include "jmlgm/simulate.hpp"

using namespace jmlgm;

namespace {

struct Setup {
  std::shared_ptr<const model::StackedDesign> design;
  std::unique_ptr<model::JointModel> model;
  std::vector<Eigen::VectorXd> thetas;
  Eigen::VectorXd warm;
};

const Setup& setup() {
  static const Setup s = [] {
    Setup out;
    sim::Scenario sc;
    sc.n_subjects = 100;
    sc.seed = 21;
    model::ModelConfig cfg;
    cfg.spline.n_knots = 12;
    out.design = std::make_shared<const model::StackedDesign>(sim::simulate_joint(sc).data, cfg);
    out.model = std::make_unique<model::JointModel>(out.design);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 0.3);
    for (int k = 0; k < 16; ++k) {
      Eigen::VectorXd t = out.model->theta_start();
      for (int i = 0; i < t.size(); ++i) t[i] += nd(rng);
      out.thetas.push_back(t);
    }
    out.warm = Eigen::VectorXd::Zero(out.model->latent_dim());
    return out;
  }();
  return s;
}

void grid_points(benchmark::State& state) {
  const auto& s = setup();
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inference::evaluate_points(*s.model, s.thetas, s.warm, parallel));
  }
  state.SetLabel(parallel ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(grid_points)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
