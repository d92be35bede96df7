#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "imapecal/experiment.hpp"
#include "imapecal/rng.hpp"

using namespace imapecal;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.antennas = 5;
  cfg.calibrators = 2;
  cfg.background = 2;
  cfg.seed = 7;
  cfg.frequencies_hz = {140e6, 150e6};
  cfg.snr_db = {0.0, 10.0};
  cfg.trials = 4;
  cfg.estimators = {"gaussian_ls", "imape_cauchy"};
  cfg.imape.max_cycles = 2;
  cfg.init_mode = "perturb";
  cfg.init_perturbation = 1e-2;
  cfg.tracked = {TrackedParameter::parse("gain_im:2:0"),
                 TrackedParameter::parse("phase:0:1")};
  return cfg;
}

}  // namespace

TEST_CASE("tracked parameter parsing, labels and extraction") {
  RandomStream rng(91);
  const ThetaVector theta = random_theta(2, 5, rng);

  const TrackedParameter gi = TrackedParameter::parse("gain_im:3:1");
  CHECK(gi.kind == TrackedParameter::Kind::GainImag);
  CHECK(gi.antenna == 3);
  CHECK(gi.component == 1);
  CHECK(gi.label() == "gain_im_a3_c1");
  CHECK(gi.extract(theta) == theta.gains(1, 3).imag());

  const TrackedParameter gr = TrackedParameter::parse("gain_re:2:0");
  CHECK(gr.extract(theta) == theta.gains(0, 2).real());
  CHECK(gr.label() == "gain_re_a2_c0");

  const TrackedParameter ph = TrackedParameter::parse("phase:1:2");
  CHECK(ph.kind == TrackedParameter::Kind::IonoPhase);
  CHECK(ph.source == 1);
  CHECK(ph.antenna == 2);
  CHECK(ph.extract(theta) == theta.iono_phase(1, 2));

  const TrackedParameter fa = TrackedParameter::parse("faraday:0:1");
  CHECK(fa.extract(theta) == theta.faraday(0, 1));

  CHECK_THROWS(TrackedParameter::parse("gain_im:3"));
  CHECK_THROWS(TrackedParameter::parse("voltage:1:2"));

  TrackedParameter bad = gi;
  bad.antenna = 9;
  CHECK_THROWS(bad.validate(2, 5));
  CHECK_NOTHROW(gi.validate(2, 5));
}

TEST_CASE("estimator ids and their priors") {
  CHECK(is_known_estimator("gaussian_ls"));
  CHECK(is_known_estimator("imape_k"));
  CHECK(is_known_estimator("imape_student"));
  CHECK(is_known_estimator("imape_cauchy"));
  CHECK(is_known_estimator("imape_laplace"));
  CHECK(is_known_estimator("imape_igcg"));
  CHECK(is_known_estimator("imape_gaussian"));
  CHECK_FALSE(is_known_estimator("imape_bogus"));
  CHECK_FALSE(is_known_estimator("ls"));

  CHECK(estimator_prior("imape_k").family == TextureFamily::KGamma);
  CHECK(estimator_prior("imape_student").family == TextureFamily::StudentT);
  CHECK(estimator_prior("imape_cauchy").family == TextureFamily::Cauchy);
  CHECK(estimator_prior("imape_laplace").family == TextureFamily::Laplace);
  CHECK(estimator_prior("imape_igcg").family ==
        TextureFamily::InverseGaussianCG);
  CHECK(estimator_prior("imape_gaussian").family ==
        TextureFamily::GaussianFixed);
  CHECK_THROWS(estimator_prior("gaussian_ls"));
}

TEST_CASE("alignment removes every gauge freedom") {
  RandomStream rng(92);
  const ThetaVector truth = random_theta(2, 6, rng);

  SUBCASE("identical input is returned unchanged") {
    const ThetaVector out = align(truth, truth);
    CHECK((out.to_real() - truth.to_real()).norm() < 1e-12);
  }
  SUBCASE("per-direction shifts of both angle blocks") {
    ThetaVector est = truth;
    est.faraday.row(0).array() += 0.4;
    est.faraday.row(1).array() -= 0.9;
    est.iono_phase.row(0).array() += 1.1;
    est.iono_phase.row(1).array() -= 0.2;
    const ThetaVector out = align(est, truth);
    CHECK((out.to_real() - truth.to_real()).norm() < 1e-9);
  }
  SUBCASE("angle branches are wrapped onto the truth") {
    ThetaVector est = truth;
    est.iono_phase(0, 1) += 2.0 * kPi;
    est.faraday(1, 2) -= 4.0 * kPi;
    const ThetaVector out = align(est, truth);
    CHECK((out.to_real() - truth.to_real()).norm() < 1e-9);
  }
  SUBCASE("one global gain phase") {
    ThetaVector est = truth;
    const Complex rot = std::polar(1.0, 0.7);
    est.gains *= rot;
    const ThetaVector out = align(est, truth);
    CHECK((out.to_real() - truth.to_real()).norm() < 1e-6);
  }
  SUBCASE("combined transformation") {
    ThetaVector est = truth;
    est.faraday.row(0).array() += 0.3;
    est.iono_phase.row(1).array() += 2.0 * kPi - 0.5;
    est.gains *= std::polar(1.0, -0.4);
    const ThetaVector out = align(est, truth);
    CHECK((out.to_real() - truth.to_real()).norm() < 1e-6);
  }
  SUBCASE("never worse than the raw input") {
    for (int i = 0; i < 20; ++i) {
      const ThetaVector est = perturb_theta(truth, rng.uniform(0.01, 2.0), rng);
      const ThetaVector out = align(est, truth);
      CHECK((out.to_real() - truth.to_real()).norm() <=
            (est.to_real() - truth.to_real()).norm() + 1e-12);
    }
  }
}

TEST_CASE("trial seeds are unique across the grid and distinct per master") {
  std::set<std::uint64_t> seen;
  for (int si = 0; si < 9; ++si)
    for (int t = 0; t < 200; ++t) CHECK(seen.insert(trial_seed(1, si, t)).second);
  CHECK(trial_seed(1, 0, 0) != trial_seed(2, 0, 0));
}

TEST_CASE("one trial yields one row per estimator on shared data") {
  const ExperimentConfig cfg = tiny_config();
  const Scene scene =
      make_scene(cfg.seed, cfg.antennas, cfg.calibrators, cfg.background,
                 cfg.scene);
  const std::uint64_t seed = trial_seed(cfg.seed, 0, 0);
  const std::vector<ResultRow> rows = run_trial(cfg, scene, 10.0, seed);

  REQUIRE(rows.size() == cfg.estimators.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].estimator == cfg.estimators[i]);
    CHECK(rows[i].snr_db == 10.0);
    CHECK(rows[i].seed == seed);
    CHECK_FALSE(rows[i].failed);
    REQUIRE(rows[i].squared_error.size() == cfg.tracked.size());
    for (double se : rows[i].squared_error) CHECK(se >= 0.0);
  }

  const std::vector<ResultRow> replay = run_trial(cfg, scene, 10.0, seed);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(replay[i].squared_error == rows[i].squared_error);
    CHECK(replay[i].cycles == rows[i].cycles);
  }
}

TEST_CASE("sweeps are deterministic and thread-count invariant") {
  ExperimentConfig cfg = tiny_config();
  std::vector<std::string> labels;
  for (const TrackedParameter& p : cfg.tracked) labels.push_back(p.label());

  cfg.threads = 1;
  const std::string csv1 = rows_to_csv(run_sweep(cfg), labels);
  const std::string csv1b = rows_to_csv(run_sweep(cfg), labels);
  CHECK(csv1 == csv1b);

  cfg.threads = 4;
  const std::string csv4 = rows_to_csv(run_sweep(cfg), labels);
  CHECK(csv1 == csv4);
}

TEST_CASE("sweep rows are ordered by snr, trial, estimator") {
  ExperimentConfig cfg = tiny_config();
  const std::vector<ResultRow> rows = run_sweep(cfg);
  REQUIRE(rows.size() ==
          cfg.snr_db.size() * cfg.trials * cfg.estimators.size());
  size_t i = 0;
  for (double snr : cfg.snr_db)
    for (int t = 0; t < cfg.trials; ++t)
      for (const std::string& est : cfg.estimators) {
        CHECK(rows[i].snr_db == snr);
        CHECK(rows[i].trial == t);
        CHECK(rows[i].estimator == est);
        ++i;
      }
}

TEST_CASE("csv rows round-trip losslessly") {
  ExperimentConfig cfg = tiny_config();
  const std::vector<ResultRow> rows = run_sweep(cfg);
  std::vector<std::string> labels;
  for (const TrackedParameter& p : cfg.tracked) labels.push_back(p.label());

  const std::string csv = rows_to_csv(rows, labels);
  std::vector<std::string> labels_back;
  const std::vector<ResultRow> parsed = rows_from_csv(csv, &labels_back);
  CHECK(labels_back == labels);
  REQUIRE(parsed.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].estimator == rows[i].estimator);
    CHECK(parsed[i].snr_db == rows[i].snr_db);
    CHECK(parsed[i].trial == rows[i].trial);
    CHECK(parsed[i].seed == rows[i].seed);
    CHECK(parsed[i].failed == rows[i].failed);
    CHECK(parsed[i].converged == rows[i].converged);
    CHECK(parsed[i].cycles == rows[i].cycles);
    CHECK(parsed[i].squared_error == rows[i].squared_error);
  }
  CHECK(rows_to_csv(parsed, labels_back) == csv);
}

TEST_CASE("timing sidecar lists every row") {
  ExperimentConfig cfg = tiny_config();
  cfg.trials = 2;
  const std::vector<ResultRow> rows = run_sweep(cfg);
  const std::string timing = timing_to_csv(rows);
  const size_t lines = std::count(timing.begin(), timing.end(), '\n');
  CHECK(lines == rows.size() + 1);  // header + one line per row
  CHECK(timing.find("wall_seconds") != std::string::npos);
}

TEST_CASE("summaries aggregate known rows correctly") {
  std::vector<ResultRow> rows;
  const auto push = [&rows](const char* est, double snr, double e0,
                            double e1) {
    ResultRow r;
    r.estimator = est;
    r.snr_db = snr;
    r.squared_error = {e0, e1};
    rows.push_back(r);
  };
  push("gaussian_ls", 0.0, 1.0, 10.0);
  push("gaussian_ls", 0.0, 3.0, 30.0);
  push("gaussian_ls", 0.0, 2.0, 20.0);
  push("imape_cauchy", 0.0, 0.5, 5.0);
  ResultRow failed;
  failed.estimator = "imape_cauchy";
  failed.snr_db = 0.0;
  failed.failed = true;
  failed.squared_error = {99.0, 99.0};
  rows.push_back(failed);

  const std::vector<SummaryEntry> summary = summarize(rows);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].estimator == "gaussian_ls");
  CHECK(summary[0].trials == 3);
  CHECK(summary[0].mse_mean[0] == doctest::Approx(2.0));
  CHECK(summary[0].mse_median[0] == doctest::Approx(2.0));
  CHECK(summary[0].mse_mean[1] == doctest::Approx(20.0));
  CHECK(summary[1].estimator == "imape_cauchy");
  CHECK(summary[1].trials == 1);
  CHECK(summary[1].failed == 1);
  CHECK(summary[1].mse_median[0] == doctest::Approx(0.5));
}

TEST_CASE("median table and gnuplot script carry the plot inputs") {
  std::vector<ResultRow> rows;
  for (double snr : {0.0, 10.0}) {
    for (const char* est : {"gaussian_ls", "imape_cauchy"}) {
      ResultRow r;
      r.estimator = est;
      r.snr_db = snr;
      r.squared_error = {snr + (est[0] == 'g' ? 1.0 : 0.5)};
      rows.push_back(r);
    }
  }
  const std::vector<SummaryEntry> summary = summarize(rows);
  const std::string table = median_table_csv(summary, 0);
  CHECK(table.find("snr_db") != std::string::npos);
  CHECK(table.find("gaussian_ls") != std::string::npos);
  CHECK(table.find("imape_cauchy") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);  // header + 2 SNRs

  const std::string script =
      gnuplot_script("mse_table.csv", "mse.png", "gain_im_a3_c1");
  CHECK(script.find("mse_table.csv") != std::string::npos);
  CHECK(script.find("mse.png") != std::string::npos);
  CHECK(script.find("logscale") != std::string::npos);
  CHECK(script.find("gain_im_a3_c1") != std::string::npos);
}

TEST_CASE("configured noise level hits the requested ratio") {
  const Scene scene = make_scene(93, 8, 2, 4);
  for (double kappa : {1.0, 25.0}) {
    for (double target : {-10.0, 0.0, 10.0, 20.0}) {
      const double sigma = sigma_for_snr(scene, target, kappa);
      if (sigma == 0.0) continue;  // background already exceeds the target
      CHECK(snr_from_sigma(scene, sigma, kappa) ==
            doctest::Approx(std::pow(10.0, target / 10.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("empirical noise power matches the configured sigma") {
  const Scene scene = make_scene(94, 6, 2, 0);
  const double sigma = 0.3;
  RandomStream rng(95);
  const VisibilitySet clean = predict_all(
      ThetaVector::identity(2, 6), scene, 150e6);
  double power = 0.0;
  const int draws = 2000;
  for (int i = 0; i < draws; ++i) {
    const VisibilitySet noisy = contaminate(clean, scene, 150e6, sigma, rng);
    power += (noisy.data - clean.data).squaredNorm();
  }
  const double per_component =
      power / (draws * 4.0 * scene.baseline_count());
  // E|n|^2 = sigma^2 per complex component; 5 sigma over the draw count.
  CHECK(per_component ==
        doctest::Approx(sigma * sigma).epsilon(5.0 / std::sqrt(draws)));
}

TEST_CASE("experiment config validation rejects bad setups") {
  ExperimentConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  cfg.trials = 0;
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config();
  cfg.snr_db = {10.0, 0.0};
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config();
  cfg.estimators = {"imape_bogus"};
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config();
  cfg.tracked[0].antenna = 99;
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config();
  cfg.init_mode = "warm";
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("config description names the effective settings") {
  const ExperimentConfig cfg = tiny_config();
  const std::string text = cfg.describe();
  CHECK(text.find("gaussian_ls") != std::string::npos);
  CHECK(text.find("imape_cauchy") != std::string::npos);
  CHECK(text.find("gain_im_a2_c0") != std::string::npos);
  CHECK(text.find("perturb") != std::string::npos);
}
