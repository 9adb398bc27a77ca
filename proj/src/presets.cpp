#include "opera/presets.hpp"

namespace opera {

std::vector<Point> linspace_points(double lo, double hi, int n) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    pts.push_back(point1d(lo + f * (hi - lo)));
  }
  return pts;
}

DiscreteMeasure preset_discrete_measure(int m, double noise_half_width) {
  if (m < 1) throw input_error("preset measure needs m >= 1");
  Eigen::VectorXd f(m);
  for (int i = 0; i < m; ++i) {
    // irregular but fixed values in [-1, 1]
    f[i] = std::sin(2.3 * i + 0.7) * (i % 2 ? -0.8 : 0.9);
  }
  return DiscreteMeasure::uniform(linspace_points(-1.0, 1.0, m), f, noise_half_width);
}

DiscreteMeasure preset_spectral_measure(const PairwiseKernel& kernel, int m, double beta,
                                        double norm_target, double noise_half_width,
                                        std::uint64_t seed) {
  DiscreteMeasure boot =
      DiscreteMeasure::uniform(linspace_points(-1.0, 1.0, m), Eigen::VectorXd::Zero(m), noise_half_width);
  SpectralModel model(kernel, boot);
  RngStream rng(seed);
  const RegularTarget target = construct_regular_target(model, beta, norm_target, rng);
  return boot.with_f_rho(target.f_rho_values);
}

}  // namespace opera
