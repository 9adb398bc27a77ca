#include "opera/measure.hpp"

namespace opera {

DiscreteMeasure::DiscreteMeasure(std::vector<Point> support, Eigen::VectorXd probs,
                                 Eigen::VectorXd f_rho_values, double noise_half_width)
    : support_(std::move(support)), probs_(std::move(probs)), f_(std::move(f_rho_values)),
      noise_(noise_half_width) {
  if (support_.empty()) throw input_error("discrete measure: empty support");
  if (probs_.size() != static_cast<Eigen::Index>(support_.size()) || f_.size() != probs_.size())
    throw input_error("discrete measure: support/probs/f_rho lengths differ");
  if (noise_ < 0.0) throw input_error("discrete measure: negative noise half-width");
  const int d = static_cast<int>(support_[0].size());
  for (const auto& p : support_)
    if (static_cast<int>(p.size()) != d) throw input_error("discrete measure: mixed point dimensions");
  for (Eigen::Index i = 0; i < probs_.size(); ++i)
    if (!(probs_[i] > 0.0)) throw input_error("discrete measure: probabilities must be positive");
  if (std::abs(probs_.sum() - 1.0) > 1e-12) throw input_error("discrete measure: probabilities must sum to 1");
  cum_.resize(probs_.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cum_[i] = acc;
  }
  cum_[probs_.size() - 1] = 1.0;
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Point> support, Eigen::VectorXd f_rho_values,
                                         double noise_half_width) {
  const auto m = static_cast<Eigen::Index>(support.size());
  if (m == 0) throw input_error("discrete measure: empty support");
  Eigen::VectorXd probs = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  return DiscreteMeasure(std::move(support), std::move(probs), std::move(f_rho_values), noise_half_width);
}

Sample DiscreteMeasure::sample(RngStream& rng) const {
  const double u = rng.uniform01();
  int idx = 0;
  while (idx + 1 < size() && u >= cum_[idx]) ++idx;
  Sample s;
  s.x = support_[static_cast<std::size_t>(idx)];
  s.support_index = idx;
  s.y = f_[idx] + rng.symmetric(noise_);
  return s;
}

int DiscreteMeasure::support_index_of(const Point& x) const {
  for (int i = 0; i < size(); ++i) {
    const Point& u = support_[static_cast<std::size_t>(i)];
    if (u.size() == x.size() && (u.array() == x.array()).all()) return i;
  }
  return -1;
}

double DiscreteMeasure::f_rho(const Point& x) const {
  const int i = support_index_of(x);
  if (i < 0) throw input_error("discrete measure: point is not a support point");
  return f_[i];
}

DiscreteMeasure DiscreteMeasure::with_f_rho(Eigen::VectorXd values) const {
  return DiscreteMeasure(support_, probs_, std::move(values), noise_);
}

namespace {

double sup_abs_sum_sq(const Box& b) {
  double acc = 0.0;
  for (int i = 0; i < b.dim(); ++i) acc += std::max(b.lo[i] * b.lo[i], b.hi[i] * b.hi[i]);
  return acc;
}

}  // namespace

SamplerMeasure::SamplerMeasure(Box box, const std::string& expr, double noise_half_width)
    : box_(std::move(box)), noise_(noise_half_width), name_(expr) {
  if (noise_ < 0.0) throw input_error("sampler measure: negative noise half-width");
  if (expr == "sin-sum") {
    f_ = [](const Point& x) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) acc += std::sin(M_PI * x[i]);
      return acc;
    };
    f_bound_ = static_cast<double>(box_.dim());
  } else if (expr == "poly2") {
    f_ = [](const Point& x) { return x.squaredNorm(); };
    f_bound_ = sup_abs_sum_sq(box_);
  } else if (expr == "step-free") {
    f_ = [](const Point& x) { return std::tanh(5.0 * x.sum()); };
    f_bound_ = 1.0;
  } else {
    throw config_error("unknown f_rho expression '" + expr + "' (catalog: sin-sum, poly2, step-free)");
  }
}

SamplerMeasure::SamplerMeasure(Box box, std::function<double(const Point&)> f_rho, double f_bound,
                               double noise_half_width, std::string name)
    : box_(std::move(box)), f_(std::move(f_rho)), f_bound_(f_bound), noise_(noise_half_width),
      name_(std::move(name)) {
  if (noise_ < 0.0) throw input_error("sampler measure: negative noise half-width");
}

Sample SamplerMeasure::sample(RngStream& rng) const {
  Sample s;
  s.x.resize(box_.dim());
  for (int i = 0; i < box_.dim(); ++i) s.x[i] = rng.uniform(box_.lo[i], box_.hi[i]);
  s.y = f_(s.x) + rng.symmetric(noise_);
  return s;
}

}  // namespace opera
