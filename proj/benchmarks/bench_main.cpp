// Microbenchmarks for the hot paths of the calibration pipeline: forward
// prediction, residual whitening, the texture and speckle updates, one
// solver run and one full calibration cycle.
#include <benchmark/benchmark.h>

#include <vector>

#include "imapecal/imape.hpp"
#include "imapecal/likelihood.hpp"
#include "imapecal/rng.hpp"
#include "imapecal/solver.hpp"
#include "imapecal/texture.hpp"

using namespace imapecal;

namespace {

struct Fixture {
  Scene scene;
  double freq = 150e6;
  ThetaVector truth;
  VisibilitySet x;
  Eigen::VectorXd tau;
  SpeckleFactor factor;

  explicit Fixture(int M, int D = 2, double sigma = 0.05)
      : scene(make_scene(17, M, D, 0)), factor(Mat4::Identity() / 4.0) {
    RandomStream rng(18);
    truth = random_theta(D, M, rng);
    x = predict_all(truth, scene, freq);
    for (int k = 0; k < x.baseline_count(); ++k)
      for (int c = 0; c < 4; ++c) x.data(c, k) += sigma * rng.complex_normal();
    tau = Eigen::VectorXd::Ones(scene.baseline_count());
  }
};

void bm_predict_all(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)));
  const ForwardModel model(f.scene, f.freq);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(f.truth));
  }
  state.SetItemsProcessed(state.iterations() * f.scene.baseline_count());
}
BENCHMARK(bm_predict_all)->Arg(8)->Arg(16)->Arg(32);

void bm_residual_quadratics(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)));
  const VisibilitySet predicted = predict_all(f.truth, f.scene, f.freq);
  for (auto _ : state) {
    benchmark::DoNotOptimize(residuals(f.x, predicted, f.factor));
  }
  state.SetItemsProcessed(state.iterations() * f.scene.baseline_count());
}
BENCHMARK(bm_residual_quadratics)->Arg(8)->Arg(32);

void bm_objective_gradient(benchmark::State& state) {
  const Fixture f(8);
  RandomStream rng(19);
  const ThetaVector theta = perturb_theta(f.truth, 0.05, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gradient(theta, f.x, f.tau, f.factor, f.scene, f.freq));
  }
}
BENCHMARK(bm_objective_gradient);

void bm_texture_update(benchmark::State& state) {
  const TexturePriorModel priors[] = {
      TexturePriorModel::k_gamma(2.0, 1.0), TexturePriorModel::student_t(2.0, 1.0),
      TexturePriorModel::cauchy(1.0), TexturePriorModel::laplace(1.0),
      TexturePriorModel::inverse_gaussian_cg(1.0)};
  const TexturePriorModel& prior = priors[state.range(0)];
  RandomStream rng(20);
  Eigen::VectorXd q(1024);
  for (int i = 0; i < q.size(); ++i) q(i) = rng.uniform(0.01, 30.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_textures(prior, q));
  }
  state.SetItemsProcessed(state.iterations() * q.size());
}
BENCHMARK(bm_texture_update)->DenseRange(0, 4)->ArgNames({"family"});

void bm_hyper_update(benchmark::State& state) {
  RandomStream rng(21);
  Eigen::VectorXd tau(256);
  for (int i = 0; i < tau.size(); ++i) tau(i) = rng.gamma(2.0, 1.0);
  const TexturePriorModel prior = TexturePriorModel::k_gamma(2.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_hyper(prior, tau));
  }
}
BENCHMARK(bm_hyper_update);

void bm_speckle_update(benchmark::State& state) {
  const Fixture f(16);
  const ResidualSet res = residuals(f.x, predict_all(f.truth, f.scene, f.freq),
                                    f.factor);
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_speckle(res, f.tau));
  }
}
BENCHMARK(bm_speckle_update);

void bm_solve_theta(benchmark::State& state) {
  const Fixture f(8);
  RandomStream rng(22);
  const ThetaVector init = perturb_theta(f.truth, 0.01, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_theta(f.x, f.tau, f.factor, f.scene, f.freq, init));
  }
}
BENCHMARK(bm_solve_theta)->Unit(benchmark::kMillisecond);

void bm_imape_cycle(benchmark::State& state) {
  const Fixture f(8);
  RandomStream rng(23);
  ImapeOptions opts;
  opts.theta_init = {perturb_theta(f.truth, 0.01, rng)};
  opts.keep_diagnostics = false;
  const TexturePriorModel prior = TexturePriorModel::cauchy(1.0);
  for (auto _ : state) {
    state.PauseTiming();
    CalibrationState s = imape_init(f.scene, {f.freq}, prior, opts);
    state.ResumeTiming();
    imape_cycle(s, {f.x}, f.scene, opts);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(bm_imape_cycle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
