#ifndef OPERA_CHECKS_HPP
#define OPERA_CHECKS_HPP

#include <string>
#include <utility>
#include <vector>

#include "opera/learner.hpp"
#include "opera/spectral.hpp"

namespace opera {

// One numeric verification: n_cases comparisons against a printed bound,
// worst_margin = min over cases of (bound - lhs), negative on violation.
struct CheckReport {
  std::string check;
  std::vector<std::pair<std::string, double>> parameters;
  long n_cases = 0;
  long n_violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double wall_time = 0.0;
  std::string note;
  std::vector<std::string> violations;  // first few offending cases

  bool passed() const { return n_violations == 0; }
  void record(double margin, const std::string& description);
};

std::string reports_to_json(const std::vector<CheckReport>& reports);

// Direct summation checks of the step-size sum bounds, every t in [4, t_max].
// Both printed left-hand variants of each lemma are reported separately:
// the lemma statements carry (1 + sum gamma) resp. (1 + (sum gamma)^2) while
// their applications use (1 + (sum gamma)^(1/2)) resp. (1 + sum gamma).
std::vector<CheckReport> lemma_sum_checks(double theta, double mu, int t_max);

// Sandwich bound for partial sums of gamma_l = l^{-theta}/mu over (j,k) windows.
CheckReport lemma9_sandwich(double theta, double mu, int t_max);

// ||prod_{l=j}^{t}(I - gamma_l A) A^beta|| <= ((beta/e)^beta + kappa^(2 beta))
//   * min(1, (sum_{l=j}^t gamma_l)^(-beta)) on random PSD matrices with
// ||A|| <= kappa^2 = mu; both sides computed by dense linear algebra.
CheckReport operator_product_norm_check(double beta, double theta, double mu, int dim, int trials,
                                        int windows, std::uint64_t seed);

enum class ConcentrationKind { bennett, pinelis };
enum class ConcentrationDist { rademacher_scalar, sphere, constant_vector };

// Monte Carlo coverage of the probabilistic inequalities: the empirical
// violation frequency must stay below delta + 3 sqrt(delta(1-delta)/n_trials).
CheckReport concentration_coverage(ConcentrationKind kind, ConcentrationDist dist, int dim, int t,
                                   double delta, int n_trials, std::uint64_t seed);

struct DecompositionReport {
  int T = 0;
  double max_onestep_residual = 0.0;  // recursion f_{t+1}-f = (I-gamma L)(f_t-f) - gamma A - gamma B
  double unrolled_residual = 0.0;     // product-form decomposition at the final step
  CheckReport as_report(double onestep_tol, double unrolled_tol) const;
};

DecompositionReport decomposition_residual(const PairwiseKernel& kernel, const DiscreteMeasure& meas,
                                           const Schedule& schedule, int T, std::uint64_t seed);

// E(B^t | z_1..z_{t-1}) = 0: resample z_t with the history held fixed and
// compare the mean grid function against its Monte Carlo standard error.
CheckReport martingale_mean_check(const PairwiseKernel& kernel, const DiscreteMeasure& meas,
                                  const Schedule& schedule, int t_fix, int n_resample,
                                  std::uint64_t seed);

}  // namespace opera

#endif  // OPERA_CHECKS_HPP
