#ifndef OPERA_VERIFY_HPP
#define OPERA_VERIFY_HPP

#include "opera/checks.hpp"

namespace opera {

// Reproducible verification suites behind `opera verify`. Each returns one
// CheckReport per sub-check; a suite passes when every report has zero
// violations.

std::vector<CheckReport> verify_lemmas(const std::vector<double>& thetas,
                                       const std::vector<double>& mus, int t_max);

std::vector<CheckReport> verify_operators(const std::vector<double>& betas, double theta, double mu,
                                          int dim, int trials, int windows, std::uint64_t seed);

std::vector<CheckReport> verify_concentration(int dim, int t, double delta, int n_trials,
                                              std::uint64_t seed);

std::vector<CheckReport> verify_decomposition(int m, int T, double theta, double sigma, double noise,
                                              std::uint64_t seed);

std::vector<CheckReport> verify_isometry(int count, std::uint64_t seed);

struct EquivalenceOptions {
  int T = 300;
  int seeds = 5;
  int m = 5;
  double sigma = 0.5;
  double theta = 2.0 / 3.0;
  double noise = 0.1;
  int probe_count = 25;
  double tolerance = 1e-8;
  std::uint64_t seed = 20240811;
};

std::vector<CheckReport> verify_equivalence(const EquivalenceOptions& opt);

}  // namespace opera

#endif  // OPERA_VERIFY_HPP
