#ifndef OPERA_EXPERIMENT_HPP
#define OPERA_EXPERIMENT_HPP

#include <map>
#include <memory>
#include <optional>

#include "opera/config.hpp"
#include "opera/learner.hpp"
#include "opera/spectral.hpp"

namespace opera {

// Declarative experiment description assembled from a flat config plus CLI
// overrides. T is a list: one stream per trial, recorded at each T_i + 1, so
// every milestone row is the last iterate of a prefix run.
struct ExperimentConfig {
  std::string kernel_spec = "induced(gaussian:0.5)";

  // measure
  bool discrete = true;
  std::vector<Point> support;
  Eigen::VectorXd probs;  // empty -> uniform
  enum class FRho { explicit_values, spectral, expr } f_rho_kind = FRho::explicit_values;
  Eigen::VectorXd f_rho_values;
  double spectral_beta = 1.0;
  std::uint64_t spectral_seed = 1;
  double spectral_norm = 1.0;
  std::string expr;
  Box box;
  double noise_half_width = 0.1;

  // runs
  std::vector<RunMode> modes{RunMode::opera_reduced};
  std::vector<int> T_list{100};
  double theta = 2.0 / 3.0;
  bool mu_auto = true;
  double mu = 1.0;
  double R = 1.0;
  EtaMode eta_mode = EtaMode::schedule;
  double eta = 0.0;
  int n_trials = 1;
  std::uint64_t base_seed = 1;
  double delta = 0.1;
  std::vector<int> record_at;
  bool record_log2 = false;
  bool average_iterates = false;
  int mc_pairs = 100000;
  int gram_cache = -1;  // -1 auto, 0 off, 1 on
  int workers = 0;      // 0 -> hardware concurrency
  int t_min_fit = 32;
  std::string output = "opera_out/run";
  std::string digest;

  int max_T() const;
};

ExperimentConfig parse_experiment_config(Config& cfg);

// Kernel, measure and bound machinery resolved from the config.
struct BuiltExperiment {
  explicit BuiltExperiment(PairwiseKernel k) : kernel(std::move(k)) {}

  PairwiseKernel kernel;
  std::unique_ptr<Measure> measure;
  double kappa = 0.0;
  double mu = 0.0;
  double M = 0.0;
  std::shared_ptr<SpectralModel> model;  // discrete measures only
  double target_rho_norm = 0.0;          // ||f_tilde||_rho (exact or MC)
};

BuiltExperiment build_experiment(const ExperimentConfig& cfg);

struct TrialRow {
  int trial = 0;
  std::uint64_t seed = 0;
  int t = 0;
  double gamma_t = 0.0;
  double error_rho = 0.0;
  double error_stderr = std::numeric_limits<double>::quiet_NaN();
  double norm_k = 0.0;
  double lemma1_bound = 0.0;
  double thm1_bound = 0.0;
  RunMode mode = RunMode::opera_reduced;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::opera_reduced;
  std::vector<TrialRow> rows;  // sorted by t
  double max_lemma1_excess = 0.0;
  double max_radius_excess = 0.0;
  double averaged_error = std::numeric_limits<double>::quiet_NaN();
  double final_error = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual of the log-log fit
  int n_points = 0;
};

struct ExperimentOutput {
  ExperimentConfig config;
  std::vector<TrialResult> trials;                 // sorted by (mode, trial)
  std::map<int, double> medians_by_t;              // first opera mode
  std::optional<RateFit> rate_fit;
  double bound_violation_fraction = 0.0;           // rows with error > thm1 bound, t >= 4
  std::map<std::string, double> final_median_by_mode;
  std::map<std::string, double> averaged_median_by_mode;
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

RateFit fit_rate(const std::vector<std::pair<double, double>>& t_vs_error, double t_min);
RateFit fit_rate(const ExperimentOutput& out, double t_min);

double median(std::vector<double> values);

void write_csv(const ExperimentOutput& out, const std::string& path);
std::string summary_json(const ExperimentOutput& out);
void write_summary(const ExperimentOutput& out, const std::string& path);

// Reads back a CSV produced by write_csv; throws config_error on malformed rows.
std::vector<TrialRow> read_csv(const std::string& path);

}  // namespace opera

#endif  // OPERA_EXPERIMENT_HPP
