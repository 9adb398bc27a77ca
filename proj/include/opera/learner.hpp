#ifndef OPERA_LEARNER_HPP
#define OPERA_LEARNER_HPP

#include <limits>
#include <optional>
#include <vector>

#include "opera/expansion.hpp"
#include "opera/measure.hpp"

namespace opera {

// Polynomially decaying step sizes gamma_t = t^{-theta} / mu. With mu >= kappa^2
// every gamma_t satisfies gamma_t kappa^2 <= 1.
struct Schedule {
  double theta;
  double mu;

  Schedule(double theta_, double mu_) : theta(theta_), mu(mu_) {
    if (!(theta > 0.0 && theta < 1.0)) throw input_error("schedule: theta must lie in (0,1)");
    if (!(mu > 0.0)) throw input_error("schedule: mu must be positive");
  }

  double gamma(int t) const {
    if (t < 1) throw input_error("schedule: t must be >= 1");
    return std::pow(static_cast<double>(t), -theta) / mu;
  }
};

enum class RunMode { opera_direct, opera_reduced, pogd };

enum class EtaMode { schedule, paper, constant };

RunMode parse_run_mode(const std::string& name);
std::string run_mode_name(RunMode m);

// Pairwise-space engine for the recursion
//   f_{t+1} = f_t - (gamma_t/(t-1)) sum_j (f_t(x_t,x_j) - y_t + y_j) K_{(x_t,x_j)}.
// Hypothesis values are always formed by summing over every stored expansion
// term; nothing is routed through the reduced univariate representation, so
// this engine stays an independent arithmetic path from ReducedEngine.
class DirectEngine {
 public:
  DirectEngine(PairwiseKernel k, int t_max, bool cache_pair_table = true);

  // Must be called before any samples arrive.
  int register_eval_point(const Point& p);

  void seed_history(const Sample& z1);
  void step(const Sample& z, double gamma);
  void project(double radius);

  int samples_seen() const { return static_cast<int>(samples_.size()); }
  std::size_t term_count() const { return alpha_.size(); }
  std::size_t last_added_terms() const { return last_added_; }
  double sq_norm() const { return std::max(sq_norm_, 0.0); }
  double rkhs_norm() const { return std::sqrt(sq_norm()); }
  const std::vector<Sample>& history() const { return samples_; }

  double evaluate(const PairPoint& p) const;
  double evaluate_registered(int a, int b) const;

  PairwiseExpansion snapshot() const;
  PairwiseExpansion averaged_snapshot(int iterates) const;
  void enable_averaging() { averaging_ = true; }
  void accumulate_average();  // fold the current iterate into the running sum

 private:
  void add_sample(const Sample& z);
  double entry(int i, int j) const;            // sample-sample scalar (G value or squared distance)
  double ep_entry(int i, int c) const;         // sample-evalpoint scalar
  double pair_from(double sa, double lb, double sb, double la) const;
  double term_sum_rows(const double* row_t, const double* row_j) const;

  PairwiseKernel kernel_;
  bool induced_;
  double inv_sigma_ = 0.0;
  int cap_;
  bool cached_;
  std::vector<Sample> samples_;
  std::vector<double> table_;      // cap x cap, filled as samples arrive
  std::vector<Point> eval_points_;
  std::vector<double> ep_table_;   // cap x eval_points
  std::vector<int> first_;         // expansion term sample indices
  std::vector<int> second_;
  std::vector<double> alpha_;
  std::size_t last_added_ = 0;
  double sq_norm_ = 0.0;
  bool averaging_ = false;
  std::vector<double> avg_alpha_;
  int avg_count_ = 0;
};

// Univariate-space engine for the rewritten recursion
//   g_{t+1} = g_t - gamma_t/(t-1) sum_j (g_t(x_t)-g_t(x_j)-y_t+y_j)(G_{x_t}-G_{x_j}),
// one coefficient per seen sample, plus a value cache g_t(x_i) for all i <= t.
class ReducedEngine {
 public:
  ReducedEngine(const PairwiseKernel& k, int t_max, bool cache_gram = true);

  int register_eval_point(const Point& p);

  void seed_history(const Sample& z1);
  void step(const Sample& z, double gamma);

  int samples_seen() const { return static_cast<int>(samples_.size()); }
  std::size_t center_count() const { return coeff_.size(); }
  double sq_norm() const { return std::max(sq_norm_, 0.0); }
  double rkhs_norm() const { return std::sqrt(sq_norm()); }
  const std::vector<Sample>& history() const { return samples_; }
  const std::vector<double>& value_cache() const { return val_; }

  double evaluate(const Point& p) const;             // g_t(p)
  double evaluate_pair(const PairPoint& p) const;    // g_t(p1) - g_t(p2)
  double evaluate_registered(int c) const;           // g_t at eval point c
  double evaluate_registered(int a, int b) const { return evaluate_registered(a) - evaluate_registered(b); }

  UnivariateExpansion snapshot() const;
  UnivariateExpansion averaged_snapshot(int iterates) const;
  void enable_averaging() { averaging_ = true; }
  void accumulate_average();

 private:
  void add_sample(const Sample& z);
  double gram_at(int i, int j) const;
  double ep_at(int i, int c) const;

  UnivariateKernel g_;
  int cap_;
  bool cached_;
  std::vector<Sample> samples_;
  std::vector<double> gram_;     // cap x cap symmetric, both triangles filled
  std::vector<Point> eval_points_;
  std::vector<double> ep_table_;
  std::vector<double> coeff_;
  std::vector<double> val_;
  std::vector<double> scratch_;
  double sq_norm_ = 0.0;
  bool averaging_ = false;
  std::vector<double> avg_coeff_;
  int avg_count_ = 0;
};

struct RunSpec {
  RunMode mode = RunMode::opera_reduced;
  int T = 100;
  std::optional<Schedule> schedule;       // opera modes, and pogd with EtaMode::schedule
  double R = 1.0;                         // pogd
  EtaMode eta_mode = EtaMode::schedule;   // pogd
  double eta = 0.0;                       // pogd with EtaMode::constant
  std::vector<int> record_at;             // iterate indices in [1, T+1]; empty -> {T+1}
  std::vector<PairPoint> probes;          // optional probe pairs recorded per row
  bool keep_snapshots = false;
  bool average_iterates = false;
  bool gram_cache = true;
  int mc_pairs = 100000;                  // error estimation on sampler measures
};

struct TrajectoryRow {
  int t = 0;  // iterate index: the row describes f_t
  double gamma_t = 0.0;
  double error_rho = 0.0;
  double error_stderr = std::numeric_limits<double>::quiet_NaN();
  double norm_k = 0.0;
  double lemma1_bound = 0.0;  // 2 M sqrt(sum_{j=2}^{t-1} gamma_j)
  std::vector<double> probe_values;
  std::optional<PairwiseExpansion> snapshot;
  std::optional<UnivariateExpansion> g_snapshot;  // reduced mode only
};

struct RunResult {
  RunMode mode = RunMode::opera_reduced;
  std::uint64_t seed = 0;
  std::vector<TrajectoryRow> rows;
  std::vector<Sample> history;
  // over every step, not only recorded ones:
  double max_lemma1_excess = 0.0;  // max relative excess of ||f_t||_K over the Lemma 1 bound
  double max_radius_excess = 0.0;  // pogd: max of ||f_t||_K - R
  double averaged_error = std::numeric_limits<double>::quiet_NaN();
  double final_norm = 0.0;
  double final_error = 0.0;
};

RunResult run(const PairwiseKernel& kernel, const Measure& measure, const RunSpec& spec,
              std::uint64_t seed);

std::vector<int> resolve_record_at(const std::vector<int>& requested, int T, bool log2_default);
std::vector<PairPoint> default_probe_pairs(const Measure& measure, int count, std::uint64_t seed);

}  // namespace opera

#endif  // OPERA_LEARNER_HPP
