#ifndef OPERA_KERNEL_HPP
#define OPERA_KERNEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "opera/common.hpp"

namespace opera {

enum class UnivariateFamily { gaussian, laplace, linear, polynomial };

// Mercer kernel G on X, X a subset of R^d. Distances are Euclidean and the
// exponential families use exp(-dist^2/sigma) resp. exp(-dist/sigma).
class UnivariateKernel {
 public:
  static UnivariateKernel gaussian(double sigma, int dim = 1);
  static UnivariateKernel laplace(double sigma, int dim = 1);
  static UnivariateKernel linear(int dim = 1);
  static UnivariateKernel polynomial(int degree, double offset, int dim = 1);

  // Spec strings: gaussian:SIGMA, laplace:SIGMA, linear, poly:DEGREE:OFFSET.
  static UnivariateKernel parse(const std::string& spec, int dim = 1);

  double operator()(const Point& x, const Point& y) const;

  UnivariateFamily family() const { return family_; }
  int dim() const { return dim_; }
  double sigma() const { return sigma_; }
  int degree() const { return degree_; }
  double offset() const { return offset_; }
  std::string spec_string() const;

 private:
  UnivariateKernel(UnivariateFamily f, int dim, double sigma, int degree, double offset)
      : family_(f), dim_(dim), sigma_(sigma), degree_(degree), offset_(offset) {}

  UnivariateFamily family_;
  int dim_;
  double sigma_ = 1.0;
  int degree_ = 1;
  double offset_ = 0.0;
};

enum class PairwiseSource { induced, direct_gaussian, direct_laplace };

// Kernel on X^2 x X^2. Either induced from a univariate G,
//   K((x1,x2),(y1,y2)) = G(x1,y1) + G(x2,y2) - G(x1,y2) - G(x2,y1),
// or a radial kernel applied directly to the concatenated pair.
class PairwiseKernel {
 public:
  static PairwiseKernel induced(UnivariateKernel g);
  static PairwiseKernel direct_gaussian(double sigma, int dim = 1);
  static PairwiseKernel direct_laplace(double sigma, int dim = 1);

  // induced(gaussian:0.5), direct-gaussian:SIGMA, direct-laplace:SIGMA.
  static PairwiseKernel parse(const std::string& spec, int dim = 1);

  double operator()(const PairPoint& p, const PairPoint& q) const;

  PairwiseSource source() const { return source_; }
  bool is_induced() const { return source_ == PairwiseSource::induced; }
  const UnivariateKernel& base() const;
  int dim() const { return dim_; }
  double sigma() const { return sigma_; }
  std::string spec_string() const;

 private:
  PairwiseKernel(PairwiseSource s, int dim, double sigma) : source_(s), dim_(dim), sigma_(sigma) {}
  explicit PairwiseKernel(UnivariateKernel g);

  PairwiseSource source_;
  int dim_;
  double sigma_ = 1.0;
  std::optional<UnivariateKernel> base_;
};

// Axis-aligned compact domain.
struct Box {
  Point lo;
  Point hi;

  Box() = default;
  Box(Point l, Point h);
  int dim() const { return static_cast<int>(lo.size()); }
  double diameter() const { return (hi - lo).norm(); }
};

// Upper bound for kappa = sup over pairs of sqrt(K((x,x'),(x,x'))).
struct KappaBound {
  double value = 0.0;
  bool analytic = false;  // closed form vs lattice scan
  int grid_points = 0;    // lattice size when not analytic
};

KappaBound kappa(const PairwiseKernel& k, const Box& domain, int points_per_axis = 64);
KappaBound kappa(const PairwiseKernel& k, const std::vector<Point>& domain);

Eigen::MatrixXd gram(const UnivariateKernel& k, const std::vector<Point>& pts);
Eigen::MatrixXd gram(const PairwiseKernel& k, const std::vector<PairPoint>& pts);

// PSD slack for floating-point Gram matrices: eigenvalues above -1e-10*trace.
double psd_tolerance(const Eigen::MatrixXd& g);
double min_eigenvalue(const Eigen::MatrixXd& g);

// Deterministic lattice over a box, at most `cap` points in total.
std::vector<Point> lattice(const Box& domain, int points_per_axis, int cap = 4096);

}  // namespace opera

#endif  // OPERA_KERNEL_HPP
