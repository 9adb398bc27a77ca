#include "opera/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>

namespace opera {

namespace {

void check_dim(int want, const Point& x, const char* who) {
  if (static_cast<int>(x.size()) != want) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: point has dimension %d, kernel expects %d", who,
                  static_cast<int>(x.size()), want);
    throw input_error(buf);
  }
}

double parse_positive(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw input_error(std::string("cannot parse ") + what + " from '" + s + "'");
  }
  if (pos != s.size()) throw input_error(std::string("trailing junk after ") + what + " in '" + s + "'");
  return v;
}

}  // namespace

UnivariateKernel UnivariateKernel::gaussian(double sigma, int dim) {
  if (sigma <= 0.0) throw input_error("gaussian kernel needs sigma > 0");
  return {UnivariateFamily::gaussian, dim, sigma, 0, 0.0};
}

UnivariateKernel UnivariateKernel::laplace(double sigma, int dim) {
  if (sigma <= 0.0) throw input_error("laplace kernel needs sigma > 0");
  return {UnivariateFamily::laplace, dim, sigma, 0, 0.0};
}

UnivariateKernel UnivariateKernel::linear(int dim) {
  return {UnivariateFamily::linear, dim, 0.0, 1, 0.0};
}

UnivariateKernel UnivariateKernel::polynomial(int degree, double offset, int dim) {
  if (degree < 1) throw input_error("polynomial kernel needs degree >= 1");
  if (offset < 0.0) throw input_error("polynomial kernel needs offset >= 0");
  return {UnivariateFamily::polynomial, dim, 0.0, degree, offset};
}

UnivariateKernel UnivariateKernel::parse(const std::string& spec, int dim) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  if (head == "gaussian" || head == "laplace") {
    if (colon == std::string::npos) throw input_error(head + " kernel spec needs :SIGMA");
    const double sigma = parse_positive(spec.substr(colon + 1), "sigma");
    return head == "gaussian" ? gaussian(sigma, dim) : laplace(sigma, dim);
  }
  if (head == "linear") {
    if (colon != std::string::npos) throw input_error("linear kernel spec takes no parameters");
    return linear(dim);
  }
  if (head == "poly") {
    if (colon == std::string::npos) throw input_error("poly kernel spec is poly:DEGREE:OFFSET");
    const std::string rest = spec.substr(colon + 1);
    const auto colon2 = rest.find(':');
    if (colon2 == std::string::npos) throw input_error("poly kernel spec is poly:DEGREE:OFFSET");
    const int degree = static_cast<int>(parse_positive(rest.substr(0, colon2), "degree"));
    const double offset = parse_positive(rest.substr(colon2 + 1), "offset");
    return polynomial(degree, offset, dim);
  }
  throw input_error("unknown univariate kernel spec '" + spec + "'");
}

double UnivariateKernel::operator()(const Point& x, const Point& y) const {
  check_dim(dim_, x, "univariate kernel");
  check_dim(dim_, y, "univariate kernel");
  switch (family_) {
    case UnivariateFamily::gaussian:
      return std::exp(-(x - y).squaredNorm() / sigma_);
    case UnivariateFamily::laplace:
      return std::exp(-(x - y).norm() / sigma_);
    case UnivariateFamily::linear:
      return x.dot(y);
    case UnivariateFamily::polynomial:
      return std::pow(x.dot(y) + offset_, degree_);
  }
  return 0.0;
}

std::string UnivariateKernel::spec_string() const {
  char buf[64];
  switch (family_) {
    case UnivariateFamily::gaussian:
      std::snprintf(buf, sizeof(buf), "gaussian:%.17g", sigma_);
      return buf;
    case UnivariateFamily::laplace:
      std::snprintf(buf, sizeof(buf), "laplace:%.17g", sigma_);
      return buf;
    case UnivariateFamily::linear:
      return "linear";
    case UnivariateFamily::polynomial:
      std::snprintf(buf, sizeof(buf), "poly:%d:%.17g", degree_, offset_);
      return buf;
  }
  return "";
}

PairwiseKernel::PairwiseKernel(UnivariateKernel g)
    : source_(PairwiseSource::induced), dim_(g.dim()), sigma_(0.0), base_(std::move(g)) {}

PairwiseKernel PairwiseKernel::induced(UnivariateKernel g) { return PairwiseKernel(std::move(g)); }

PairwiseKernel PairwiseKernel::direct_gaussian(double sigma, int dim) {
  if (sigma <= 0.0) throw input_error("direct-gaussian kernel needs sigma > 0");
  return {PairwiseSource::direct_gaussian, dim, sigma};
}

PairwiseKernel PairwiseKernel::direct_laplace(double sigma, int dim) {
  if (sigma <= 0.0) throw input_error("direct-laplace kernel needs sigma > 0");
  return {PairwiseSource::direct_laplace, dim, sigma};
}

PairwiseKernel PairwiseKernel::parse(const std::string& spec, int dim) {
  if (spec.rfind("induced(", 0) == 0 && spec.back() == ')') {
    return induced(UnivariateKernel::parse(spec.substr(8, spec.size() - 9), dim));
  }
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  if (head == "direct-gaussian" || head == "direct-laplace") {
    if (colon == std::string::npos) throw input_error(head + " kernel spec needs :SIGMA");
    const double sigma = parse_positive(spec.substr(colon + 1), "sigma");
    return head == "direct-gaussian" ? direct_gaussian(sigma, dim) : direct_laplace(sigma, dim);
  }
  throw input_error("unknown pairwise kernel spec '" + spec + "'");
}

const UnivariateKernel& PairwiseKernel::base() const {
  if (!base_) throw state_error("pairwise kernel is not induced from a univariate kernel");
  return *base_;
}

double PairwiseKernel::operator()(const PairPoint& p, const PairPoint& q) const {
  switch (source_) {
    case PairwiseSource::induced: {
      const UnivariateKernel& g = *base_;
      return g(p.first, q.first) + g(p.second, q.second) - g(p.first, q.second) -
             g(p.second, q.first);
    }
    case PairwiseSource::direct_gaussian: {
      check_dim(dim_, p.first, "pairwise kernel");
      check_dim(dim_, q.first, "pairwise kernel");
      check_dim(dim_, p.second, "pairwise kernel");
      check_dim(dim_, q.second, "pairwise kernel");
      const double d2 = (p.first - q.first).squaredNorm() + (p.second - q.second).squaredNorm();
      return std::exp(-d2 / sigma_);
    }
    case PairwiseSource::direct_laplace: {
      check_dim(dim_, p.first, "pairwise kernel");
      check_dim(dim_, q.first, "pairwise kernel");
      check_dim(dim_, p.second, "pairwise kernel");
      check_dim(dim_, q.second, "pairwise kernel");
      const double d2 = (p.first - q.first).squaredNorm() + (p.second - q.second).squaredNorm();
      return std::exp(-std::sqrt(d2) / sigma_);
    }
  }
  return 0.0;
}

std::string PairwiseKernel::spec_string() const {
  char buf[80];
  switch (source_) {
    case PairwiseSource::induced:
      return "induced(" + base_->spec_string() + ")";
    case PairwiseSource::direct_gaussian:
      std::snprintf(buf, sizeof(buf), "direct-gaussian:%.17g", sigma_);
      return buf;
    case PairwiseSource::direct_laplace:
      std::snprintf(buf, sizeof(buf), "direct-laplace:%.17g", sigma_);
      return buf;
  }
  return "";
}

Box::Box(Point l, Point h) : lo(std::move(l)), hi(std::move(h)) {
  if (lo.size() != hi.size() || lo.size() == 0) throw input_error("box needs matching nonempty bounds");
  for (int i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw input_error("box needs lo <= hi on every axis");
}

std::vector<Point> lattice(const Box& domain, int points_per_axis, int cap) {
  const int d = domain.dim();
  int n = points_per_axis;
  // keep the total lattice size desk-scale in higher dimension
  while (n > 2 && std::pow(static_cast<double>(n), d) > cap) --n;
  std::vector<Point> pts;
  std::vector<int> idx(d, 0);
  const auto total = static_cast<std::size_t>(std::pow(static_cast<double>(n), d));
  pts.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      const double f = (n == 1) ? 0.5 : static_cast<double>(idx[k]) / (n - 1);
      p[k] = domain.lo[k] + f * (domain.hi[k] - domain.lo[k]);
    }
    pts.push_back(std::move(p));
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
  }
  return pts;
}

namespace {

KappaBound kappa_over_pairs(const PairwiseKernel& k, const std::vector<Point>& pts, bool inflate) {
  double best = 0.0;
  for (const auto& x : pts)
    for (const auto& y : pts) {
      const PairPoint p{x, y};
      best = std::max(best, k(p, p));
    }
  KappaBound b;
  b.value = std::sqrt(std::max(best, 0.0)) * (inflate ? 1.01 : 1.0);
  b.analytic = false;
  b.grid_points = static_cast<int>(pts.size());
  return b;
}

}  // namespace

KappaBound kappa(const PairwiseKernel& k, const Box& domain, int points_per_axis) {
  if (domain.dim() == 0) throw input_error("kappa: empty domain");
  const double diam = domain.diameter();
  KappaBound b;
  b.analytic = true;
  switch (k.source()) {
    case PairwiseSource::direct_gaussian:
    case PairwiseSource::direct_laplace:
      b.value = 1.0;  // K(p,p) = exp(0)
      return b;
    case PairwiseSource::induced:
      break;
  }
  switch (k.base().family()) {
    case UnivariateFamily::gaussian:
      // K(p,p) = 2 - 2 G(x,x'), G decreasing in distance, so the sup sits at
      // the box diameter and never exceeds 2.
      b.value = std::sqrt(2.0 - 2.0 * std::exp(-diam * diam / k.base().sigma()));
      return b;
    case UnivariateFamily::laplace:
      b.value = std::sqrt(2.0 - 2.0 * std::exp(-diam / k.base().sigma()));
      return b;
    case UnivariateFamily::linear:
      // K(p,p) = |x - x'|^2
      b.value = diam;
      return b;
    case UnivariateFamily::polynomial:
      return kappa_over_pairs(k, lattice(domain, points_per_axis), /*inflate=*/true);
  }
  return b;
}

KappaBound kappa(const PairwiseKernel& k, const std::vector<Point>& domain) {
  if (domain.empty()) throw input_error("kappa: empty domain");
  // finite domain: the sup over pairs is attained, no inflation needed
  KappaBound b = kappa_over_pairs(k, domain, /*inflate=*/false);
  b.analytic = true;
  return b;
}

Eigen::MatrixXd gram(const UnivariateKernel& k, const std::vector<Point>& pts) {
  if (pts.empty()) throw input_error("gram: empty point list");
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = k(pts[i], pts[j]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd gram(const PairwiseKernel& k, const std::vector<PairPoint>& pts) {
  if (pts.empty()) throw input_error("gram: empty point list");
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = k(pts[i], pts[j]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

double psd_tolerance(const Eigen::MatrixXd& g) { return 1e-10 * g.trace(); }

double min_eigenvalue(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace opera
