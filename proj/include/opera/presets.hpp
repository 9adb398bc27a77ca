#ifndef OPERA_PRESETS_HPP
#define OPERA_PRESETS_HPP

#include "opera/measure.hpp"
#include "opera/spectral.hpp"

namespace opera {

std::vector<Point> linspace_points(double lo, double hi, int n);

// m equispaced support points on [-1,1], uniform weights, fixed irregular
// targets; the workhorse measure of the verification suites.
DiscreteMeasure preset_discrete_measure(int m, double noise_half_width);

// Same support but with a spectrally constructed target inside the range of
// L_K^beta, anchored back to univariate values.
DiscreteMeasure preset_spectral_measure(const PairwiseKernel& kernel, int m, double beta,
                                        double norm_target, double noise_half_width,
                                        std::uint64_t seed);

}  // namespace opera

#endif  // OPERA_PRESETS_HPP
