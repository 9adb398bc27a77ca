#ifndef OPERA_EXPANSION_HPP
#define OPERA_EXPANSION_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "opera/kernel.hpp"

namespace opera {

namespace detail {
inline bool same_center(const Point& a, const Point& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;  // exact: sample points are never perturbed
  return true;
}
inline bool same_center(const PairPoint& a, const PairPoint& b) {
  return same_center(a.first, b.first) && same_center(a.second, b.second);
}
inline Eigen::MatrixXd center_gram(const UnivariateKernel& k, const std::vector<Point>& c) {
  return gram(k, c);
}
inline Eigen::MatrixXd center_gram(const PairwiseKernel& k, const std::vector<PairPoint>& c) {
  return gram(k, c);
}
}  // namespace detail

// Finite kernel expansion sum_i coeff_i * k(center_i, .). Value semantics:
// mutating operations return a new expansion.
template <class KernelType, class InputType>
class Expansion {
 public:
  explicit Expansion(KernelType k) : kernel_(std::move(k)) {}

  const KernelType& kernel() const { return kernel_; }
  std::size_t size() const { return centers_.size(); }
  const std::vector<InputType>& centers() const { return centers_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }
  const std::optional<double>& cached_sq_norm() const { return sq_norm_; }

  double evaluate(const InputType& p) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < centers_.size(); ++i) acc += coeffs_[static_cast<Eigen::Index>(i)] * kernel_(centers_[i], p);
    return acc;
  }

  double squared_norm() const {
    if (sq_norm_) return *sq_norm_;
    if (centers_.empty()) {
      sq_norm_ = 0.0;
      return 0.0;
    }
    const Eigen::MatrixXd g = detail::center_gram(kernel_, centers_);
    // near-singular Grams can push the quadratic form a hair below zero
    const double q = coeffs_.dot(g * coeffs_);
    sq_norm_ = std::max(q, 0.0);
    return *sq_norm_;
  }

  double rkhs_norm() const { return std::sqrt(squared_norm()); }

  // Appends terms; with merge, a new term whose center coincides exactly with
  // an existing one folds into that coefficient instead.
  Expansion with_terms(const std::vector<InputType>& new_centers, const Eigen::VectorXd& new_coeffs,
                       bool merge = false) const {
    if (new_centers.size() != static_cast<std::size_t>(new_coeffs.size()))
      throw input_error("with_terms: centers and coefficients differ in length");
    Expansion out = *this;
    out.sq_norm_.reset();
    for (std::size_t i = 0; i < new_centers.size(); ++i) {
      const double a = new_coeffs[static_cast<Eigen::Index>(i)];
      if (merge) {
        bool hit = false;
        for (std::size_t j = 0; j < out.centers_.size(); ++j) {
          if (detail::same_center(out.centers_[j], new_centers[i])) {
            out.coeffs_[static_cast<Eigen::Index>(j)] += a;
            hit = true;
            break;
          }
        }
        if (hit) continue;
      }
      out.centers_.push_back(new_centers[i]);
      out.coeffs_.conservativeResize(out.coeffs_.size() + 1);
      out.coeffs_[out.coeffs_.size() - 1] = a;
    }
    return out;
  }

  // Projection onto the RKHS ball of radius R; identity when already inside.
  Expansion projected(double R) const {
    if (R < 0.0) throw input_error("projected: radius must be >= 0");
    const double n = rkhs_norm();
    if (n <= R) return *this;
    Expansion out = *this;
    const double f = (n > 0.0) ? R / n : 0.0;
    out.coeffs_ *= f;
    out.sq_norm_ = R * R;
    return out;
  }

  Expansion scaled(double c) const {
    Expansion out = *this;
    out.coeffs_ *= c;
    if (sq_norm_) out.sq_norm_ = *sq_norm_ * c * c;
    return out;
  }

  // Trusted constructor for callers that already hold matched arrays.
  static Expansion from_parts(KernelType k, std::vector<InputType> centers, Eigen::VectorXd coeffs,
                              std::optional<double> sq_norm = std::nullopt) {
    if (centers.size() != static_cast<std::size_t>(coeffs.size()))
      throw input_error("expansion: centers and coefficients differ in length");
    Expansion out(std::move(k));
    out.centers_ = std::move(centers);
    out.coeffs_ = std::move(coeffs);
    out.sq_norm_ = sq_norm;
    return out;
  }

 private:
  KernelType kernel_;
  std::vector<InputType> centers_;
  Eigen::VectorXd coeffs_;
  mutable std::optional<double> sq_norm_;
};

using UnivariateExpansion = Expansion<UnivariateKernel, Point>;
using PairwiseExpansion = Expansion<PairwiseKernel, PairPoint>;

// Im(g)(x1,x2) = g(x1) - g(x2), the pairwise hypothesis recovered from a
// univariate one. Evaluation shares g's arithmetic path exactly.
class LiftedHypothesis {
 public:
  explicit LiftedHypothesis(UnivariateExpansion base) : base_(std::move(base)) {}

  double operator()(const PairPoint& p) const { return base_.evaluate(p.first) - base_.evaluate(p.second); }
  double evaluate(const Point& a, const Point& b) const { return base_.evaluate(a) - base_.evaluate(b); }
  const UnivariateExpansion& base() const { return base_; }

 private:
  UnivariateExpansion base_;
};

inline LiftedHypothesis lift(UnivariateExpansion g) { return LiftedHypothesis(std::move(g)); }

// g = sum_i coeff_i (G_{a_i} - G_{b_i}); the subspace where the isometry of
// the induced kernel is guaranteed.
struct DifferenceExpansion {
  std::vector<PairPoint> pairs;  // (a_i, b_i)
  Eigen::VectorXd coeffs;
};

struct IsometryResult {
  double norm_g = 0.0;  // ||g||_G via the univariate Gram
  double norm_k = 0.0;  // ||Im(g)||_K via the induced pairwise Gram
};

IsometryResult isometry_check(const UnivariateKernel& g, const DifferenceExpansion& d);

UnivariateExpansion difference_to_univariate(const UnivariateKernel& g, const DifferenceExpansion& d);
PairwiseExpansion difference_to_pairwise(const UnivariateKernel& g, const DifferenceExpansion& d);

std::string to_json_string(const UnivariateExpansion& e);
std::string to_json_string(const PairwiseExpansion& e);
UnivariateExpansion univariate_expansion_from_json(const std::string& text, int dim = 1);
PairwiseExpansion pairwise_expansion_from_json(const std::string& text, int dim = 1);

}  // namespace opera

#endif  // OPERA_EXPANSION_HPP
