#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "opera/experiment.hpp"
#include "opera/presets.hpp"

using namespace opera;

namespace {

const char* kMiniConfig = R"(
kernel = induced(gaussian:0.5)
support = -1,-0.5,0,0.5,1
f_rho = 0.9,-0.3,0.5,-0.7,0.1
noise_half_width = 0.1
mode = opera-reduced
T = 40
theta = 2/3
mu = auto
n_trials = 2
seed = 7
record_at = log2
output = /tmp/opera_test_out/mini
)";

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  Config cfg = Config::from_string(kMiniConfig);
  const ExperimentConfig ecfg = parse_experiment_config(cfg);
  CHECK(ecfg.support.size() == 5);
  CHECK(ecfg.T_list == std::vector<int>{40});
  CHECK(ecfg.theta == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(ecfg.mu_auto);
  CHECK(ecfg.n_trials == 2);
  CHECK(ecfg.record_log2);

  Config with_unknown = Config::from_string(kMiniConfig);
  with_unknown.set("mystery_key", "1");
  CHECK_THROWS_AS(parse_experiment_config(with_unknown), config_error);

  Config bad_theta = Config::from_string(kMiniConfig);
  bad_theta.set("theta", "1.5");
  CHECK_THROWS_AS(parse_experiment_config(bad_theta), config_error);

  Config no_measure = Config::from_string("kernel = induced(linear)\n");
  CHECK_THROWS_AS(parse_experiment_config(no_measure), config_error);

  Config frac = Config::from_string("x = 2/3\n");
  CHECK(frac.get_double("x") == doctest::Approx(2.0 / 3.0).epsilon(1e-16));
  CHECK_THROWS_AS(Config::from_string("novalue\n"), config_error);
}

TEST_CASE("overrides change the digest and take precedence") {
  Config a = Config::from_string(kMiniConfig);
  Config b = Config::from_string(kMiniConfig);
  b.set("theta", "0.75");
  CHECK(a.digest() != b.digest());
  const ExperimentConfig eb = parse_experiment_config(b);
  CHECK(eb.theta == doctest::Approx(0.75).epsilon(0.0).epsilon(1e-16));
  CHECK(eb.digest == b.digest());
}

TEST_CASE("experiment runs are deterministic and emit the expected rows") {
  Config cfg = Config::from_string(kMiniConfig);
  const ExperimentConfig ecfg = parse_experiment_config(cfg);
  const ExperimentOutput out1 = run_experiment(ecfg);
  const ExperimentOutput out2 = run_experiment(ecfg);

  // record set: log2 points {2,4,8,16,32} plus the milestone T+1 = 41
  REQUIRE(out1.trials.size() == 2);
  for (const auto& tr : out1.trials) {
    REQUIRE(tr.rows.size() == 6);
    CHECK(tr.rows.front().t == 2);
    CHECK(tr.rows.back().t == 41);
    int prev = 0;
    for (const auto& row : tr.rows) {
      CHECK(row.t > prev);
      prev = row.t;
      CHECK(std::isfinite(row.error_rho));
      CHECK(std::isfinite(row.norm_k));
      CHECK(std::isfinite(row.thm1_bound));
      CHECK(std::isfinite(row.gamma_t));
      CHECK(std::isfinite(row.lemma1_bound));
    }
  }

  write_csv(out1, "/tmp/opera_test_out/a.csv");
  write_csv(out2, "/tmp/opera_test_out/b.csv");
  CHECK(slurp("/tmp/opera_test_out/a.csv") == slurp("/tmp/opera_test_out/b.csv"));

  const auto rows = read_csv("/tmp/opera_test_out/a.csv");
  CHECK(rows.size() == 12);
  CHECK(rows[0].mode == RunMode::opera_reduced);
}

TEST_CASE("zero-step experiment records the target norm") {
  Config cfg = Config::from_string(kMiniConfig);
  cfg.set("T", "2");
  cfg.set("record_at", "2");
  cfg.set("n_trials", "1");
  const ExperimentConfig ecfg = parse_experiment_config(cfg);
  const BuiltExperiment built = build_experiment(ecfg);
  const ExperimentOutput out = run_experiment(ecfg);
  REQUIRE(out.trials.size() == 1);
  // rows at t=2 (requested) and t=3 (milestone); the t=2 row is the zero hypothesis
  REQUIRE(out.trials[0].rows.size() == 2);
  CHECK(out.trials[0].rows[0].t == 2);
  CHECK(out.trials[0].rows[0].error_rho == doctest::Approx(built.target_rho_norm).epsilon(1e-12));
  CHECK(out.trials[0].rows[0].norm_k == 0.0);
}

TEST_CASE("spectral target config reproduces the anchored measure") {
  Config cfg = Config::from_string(kMiniConfig);
  cfg.set("support", "-1,-0.6,-0.2,0.2,0.6,1");
  cfg.set("f_rho", "spectral:beta=1:seed=3:norm=2");
  const ExperimentConfig ecfg = parse_experiment_config(cfg);
  const BuiltExperiment built = build_experiment(ecfg);
  const auto* dm = dynamic_cast<const DiscreteMeasure*>(built.measure.get());
  REQUIRE(dm != nullptr);
  const PairwiseKernel k = PairwiseKernel::parse(ecfg.kernel_spec);
  const DiscreteMeasure direct = preset_spectral_measure(k, 6, 1.0, 2.0, ecfg.noise_half_width, 3);
  for (int i = 0; i < 6; ++i)
    CHECK(dm->f_rho_values()[i] == doctest::Approx(direct.f_rho_values()[i]).epsilon(1e-12));
}

TEST_CASE("rate fitting") {
  // exact power law
  std::vector<std::pair<double, double>> pts;
  for (double t : {64.0, 128.0, 256.0, 512.0, 1024.0}) pts.emplace_back(t, 3.0 * std::pow(t, -0.25));
  RateFit fit = fit_rate(pts, 32);
  CHECK(fit.slope == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));

  // constant series
  pts.clear();
  for (double t : {64.0, 128.0, 256.0}) pts.emplace_back(t, 0.7);
  CHECK(fit_rate(pts, 32).slope == doctest::Approx(0.0).epsilon(1e-12));

  // noisy t^{-1/6}
  pts.clear();
  RngStream rng(14);
  for (double t = 100.0; t <= 10000.0; t *= 1.45)
    pts.emplace_back(t, std::pow(t, -1.0 / 6.0) * (1.0 + 0.05 * rng.uniform(-1, 1)));
  fit = fit_rate(pts, 32);
  CHECK(std::abs(fit.slope - (-1.0 / 6.0)) <= 0.03);

  pts.resize(2);
  CHECK_THROWS_AS(fit_rate(pts, 32), input_error);
}

TEST_CASE("paired mode comparison") {
  Config cfg = Config::from_string(kMiniConfig);
  cfg.set("mode", "opera-direct,pogd");
  cfg.set("T", "40");
  cfg.set("n_trials", "3");
  cfg.set("R", "1000000");  // far above the norm bound: projection never fires
  cfg.set("eta", "match");
  cfg.set("average_iterates", "1");
  const ExperimentConfig ecfg = parse_experiment_config(cfg);
  const ExperimentOutput out = run_experiment(ecfg);

  REQUIRE(out.trials.size() == 6);
  std::map<int, const TrialResult*> opera_by_trial, pogd_by_trial;
  for (const auto& tr : out.trials) {
    if (tr.mode == RunMode::pogd)
      pogd_by_trial[tr.trial] = &tr;
    else
      opera_by_trial[tr.trial] = &tr;
  }
  REQUIRE(opera_by_trial.size() == 3);
  REQUIRE(pogd_by_trial.size() == 3);
  for (const auto& [trial, op] : opera_by_trial) {
    const TrialResult* pg = pogd_by_trial.at(trial);
    CHECK(pg->seed == op->seed);
    REQUIRE(pg->rows.size() == op->rows.size());
    for (std::size_t i = 0; i < op->rows.size(); ++i) {
      CHECK(pg->rows[i].t == op->rows[i].t);
      // inactive projection with matched steps: identical trajectories
      CHECK(pg->rows[i].error_rho == doctest::Approx(op->rows[i].error_rho).epsilon(1e-10));
      CHECK(pg->rows[i].norm_k <= 1000000.0 + 1e-9);
    }
    CHECK(std::isfinite(pg->averaged_error));
    CHECK(std::isfinite(op->averaged_error));
  }
  CHECK(out.final_median_by_mode.count("pogd") == 1);
  CHECK(out.averaged_median_by_mode.count("pogd") == 1);

  const std::string summary = summary_json(out);
  CHECK(summary.find("config_digest") != std::string::npos);
  CHECK(summary.find("medians_by_t") != std::string::npos);
  CHECK(summary.find("rate_fit") != std::string::npos);
  CHECK(summary.find("bound_violation_fraction") != std::string::npos);
}

TEST_CASE("thm1 bound column dominates errors on a friendly setup") {
  Config cfg = Config::from_string(kMiniConfig);
  cfg.set("T", "60");
  cfg.set("n_trials", "5");
  const ExperimentOutput out = run_experiment(parse_experiment_config(cfg));
  CHECK(out.bound_violation_fraction == 0.0);  // constants are astronomically loose here
  for (const auto& tr : out.trials) CHECK(tr.max_lemma1_excess <= 1e-9);
}

TEST_CASE("continuous measure experiments run end to end") {
  Config cfg = Config::from_string(R"(
kernel = induced(gaussian:1)
box = -1,1
f_rho = expr:sin-sum
noise_half_width = 0.05
mode = opera-reduced
T = 30
theta = 2/3
mu = auto
n_trials = 1
seed = 3
mc_pairs = 2000
output = /tmp/opera_test_out/cont
)");
  const ExperimentOutput out = run_experiment(parse_experiment_config(cfg));
  REQUIRE(out.trials.size() == 1);
  for (const auto& row : out.trials[0].rows) {
    CHECK(std::isfinite(row.error_rho));
    CHECK(std::isfinite(row.error_stderr));  // Monte Carlo rows carry a stderr
    CHECK(std::isfinite(row.thm1_bound));
  }
}

TEST_CASE("csv reader rejects corrupt files") {
  std::filesystem::create_directories("/tmp/opera_test_out");
  {
    std::ofstream f("/tmp/opera_test_out/corrupt.csv");
    f << "trial,seed,t\n1,2\n";
  }
  CHECK_THROWS_AS(read_csv("/tmp/opera_test_out/corrupt.csv"), config_error);
  CHECK_THROWS_AS(read_csv("/tmp/opera_test_out/missing.csv"), config_error);
}
