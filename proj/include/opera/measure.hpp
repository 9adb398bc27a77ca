#ifndef OPERA_MEASURE_HPP
#define OPERA_MEASURE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "opera/kernel.hpp"

namespace opera {

struct Sample {
  Point x;
  double y = 0.0;
  int support_index = -1;  // >= 0 for discrete measures
};

// Data distribution rho = rho_X x additive bounded-uniform label noise around
// f_rho. |y| <= label_bound() surely.
class Measure {
 public:
  virtual ~Measure() = default;
  virtual int dim() const = 0;
  virtual Sample sample(RngStream& rng) const = 0;
  virtual double f_rho(const Point& x) const = 0;
  virtual double label_bound() const = 0;
  virtual double noise_half_width() const = 0;
  virtual bool is_discrete() const { return false; }
};

class DiscreteMeasure final : public Measure {
 public:
  DiscreteMeasure(std::vector<Point> support, Eigen::VectorXd probs, Eigen::VectorXd f_rho_values,
                  double noise_half_width);

  static DiscreteMeasure uniform(std::vector<Point> support, Eigen::VectorXd f_rho_values,
                                 double noise_half_width);

  int dim() const override { return static_cast<int>(support_[0].size()); }
  int size() const { return static_cast<int>(support_.size()); }
  const std::vector<Point>& support() const { return support_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  const Eigen::VectorXd& f_rho_values() const { return f_; }
  double noise_half_width() const override { return noise_; }
  bool is_discrete() const override { return true; }

  double label_bound() const override { return f_.cwiseAbs().maxCoeff() + noise_; }

  Sample sample(RngStream& rng) const override;

  double f_rho(const Point& x) const override;
  int support_index_of(const Point& x) const;  // -1 when x is not a support point

  DiscreteMeasure with_f_rho(Eigen::VectorXd values) const;

 private:
  std::vector<Point> support_;
  Eigen::VectorXd probs_;
  Eigen::VectorXd cum_;  // cumulative probabilities for inverse-CDF sampling
  Eigen::VectorXd f_;
  double noise_;
};

class SamplerMeasure final : public Measure {
 public:
  // expr from the fixed catalog {sin-sum, poly2, step-free}; x uniform on box.
  SamplerMeasure(Box box, const std::string& expr, double noise_half_width);
  SamplerMeasure(Box box, std::function<double(const Point&)> f_rho, double f_bound,
                 double noise_half_width, std::string name = "custom");

  int dim() const override { return box_.dim(); }
  const Box& box() const { return box_; }
  const std::string& expr_name() const { return name_; }
  double noise_half_width() const override { return noise_; }
  double label_bound() const override { return f_bound_ + noise_; }

  Sample sample(RngStream& rng) const override;
  double f_rho(const Point& x) const override { return f_(x); }

 private:
  Box box_;
  std::function<double(const Point&)> f_;
  double f_bound_;
  double noise_;
  std::string name_;
};

// f_tilde_rho(x, x') = f_rho(x) - f_rho(x'); antisymmetric, zero on the diagonal.
class PairwiseTarget {
 public:
  explicit PairwiseTarget(const Measure& m) : m_(&m) {}
  double operator()(const Point& a, const Point& b) const { return m_->f_rho(a) - m_->f_rho(b); }
  double operator()(const PairPoint& p) const { return (*this)(p.first, p.second); }

 private:
  const Measure* m_;
};

inline PairwiseTarget pairwise_target(const Measure& m) { return PairwiseTarget(m); }

struct RhoNorm {
  double value = 0.0;
  double stderr_value = std::numeric_limits<double>::quiet_NaN();  // NaN when exact
};

// Exact L^2_rho(X^2) norm on a discrete measure: weighted double sum over the
// support grid.
template <class F>
RhoNorm rho_norm(F&& f, const DiscreteMeasure& m) {
  double acc = 0.0;
  const auto& u = m.support();
  for (int a = 0; a < m.size(); ++a)
    for (int b = 0; b < m.size(); ++b) {
      const double v = f(u[a], u[b]);
      acc += m.probs()[a] * m.probs()[b] * v * v;
    }
  return {std::sqrt(std::max(acc, 0.0)), std::numeric_limits<double>::quiet_NaN()};
}

// Monte Carlo norm over n i.i.d. pairs; delta-method standard error.
template <class F>
RhoNorm rho_norm_mc(F&& f, const Measure& m, int n_pairs, RngStream& rng) {
  if (n_pairs < 2) throw input_error("rho_norm_mc: need at least 2 pairs");
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const Sample a = m.sample(rng), b = m.sample(rng);
    const double v = f(a.x, b.x);
    const double sq = v * v;
    const double d = sq - mean;
    mean += d / (i + 1);
    m2 += d * (sq - mean);
  }
  const double se_mean = std::sqrt(std::max(m2, 0.0) / (static_cast<double>(n_pairs) - 1.0) / n_pairs);
  const double norm = std::sqrt(std::max(mean, 0.0));
  const double se = norm > 1e-300 ? se_mean / (2.0 * norm) : std::sqrt(se_mean);
  return {norm, se};
}

// Pairwise least-squares risk E(f(x,x') - y + y')^2. Exact on discrete
// measures: ||f - f_tilde||_rho^2 + 2 sigma^2/3 (uniform noise variance
// sigma^2/3 enters twice).
template <class F>
double risk(F&& f, const DiscreteMeasure& m) {
  const PairwiseTarget t(m);
  auto diff = [&](const Point& a, const Point& b) { return f(a, b) - t(a, b); };
  const double n = rho_norm(diff, m).value;
  const double s = m.noise_half_width();
  return n * n + 2.0 * s * s / 3.0;
}

template <class F>
RhoNorm risk_mc(F&& f, const Measure& m, int n_pairs, RngStream& rng) {
  if (n_pairs < 2) throw input_error("risk_mc: need at least 2 pairs");
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const Sample a = m.sample(rng), b = m.sample(rng);
    const double v = f(a.x, b.x) - a.y + b.y;
    const double sq = v * v;
    const double d = sq - mean;
    mean += d / (i + 1);
    m2 += d * (sq - mean);
  }
  const double se = std::sqrt(std::max(m2, 0.0) / (static_cast<double>(n_pairs) - 1.0) / n_pairs);
  return {mean, se};
}

}  // namespace opera

#endif  // OPERA_MEASURE_HPP
