#include <doctest.h>

#include <cmath>

#include "opera/kernel.hpp"

using namespace opera;

namespace {

Point p1(double x) { return point1d(x); }

Point p2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

std::vector<Point> random_points(RngStream& rng, int n, int dim = 1) {
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = rng.uniform(-1.0, 1.0);
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace

TEST_CASE("univariate kernel values") {
  const auto g = UnivariateKernel::gaussian(1.0);
  CHECK(g(p1(0.37), p1(0.37)) == 1.0);
  CHECK(g(p1(0.0), p1(1.0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  const auto lin = UnivariateKernel::linear(2);
  CHECK(lin(p2(1, 2), p2(3, 4)) == 11.0);

  const auto lap = UnivariateKernel::laplace(2.0);
  CHECK(lap(p1(0.0), p1(1.0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

  const auto poly = UnivariateKernel::polynomial(2, 1.0, 2);
  CHECK(poly(p2(1, 0), p2(2, 0)) == doctest::Approx(9.0).epsilon(1e-15));

  CHECK_THROWS_AS(g(p1(0.0), p2(0.0, 1.0)), input_error);
}

TEST_CASE("univariate kernel symmetry") {
  RngStream rng(11);
  for (const auto& spec : {"gaussian:0.5", "laplace:1.5", "linear", "poly:3:0.5"}) {
    const auto k = UnivariateKernel::parse(spec, 2);
    for (int i = 0; i < 20; ++i) {
      const Point a = p2(rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Point b = p2(rng.uniform(-1, 1), rng.uniform(-1, 1));
      CHECK(k(a, b) == k(b, a));
    }
  }
}

TEST_CASE("induced pairwise kernel satisfies the four-term expansion") {
  const auto g = UnivariateKernel::gaussian(1.0);
  const auto k = PairwiseKernel::induced(g);
  RngStream rng(7);
  for (int i = 0; i < 30; ++i) {
    const Point x1 = p1(rng.uniform(-1, 1)), x2 = p1(rng.uniform(-1, 1));
    const Point y1 = p1(rng.uniform(-1, 1)), y2 = p1(rng.uniform(-1, 1));
    const double lhs = k({x1, x2}, {y1, y2});
    // inner-product form <G_{x1} - G_{x2}, G_{y1} - G_{y2}>_G expanded
    const double rhs = (g(x1, y1) - g(x1, y2)) - (g(x2, y1) - g(x2, y2));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("induced kernel vanishes on equal pairs and on the diagonal") {
  const auto k = PairwiseKernel::induced(UnivariateKernel::gaussian(0.5));
  RngStream rng(3);
  for (int i = 0; i < 10; ++i) {
    const Point x = p1(rng.uniform(-1, 1));
    const Point a = p1(rng.uniform(-1, 1)), b = p1(rng.uniform(-1, 1));
    CHECK(std::abs(k({x, x}, {a, b})) <= 1e-15);
  }
  // diagonal over gaussian: K(p,p) = 2 - 2 G(x,x')
  const auto g = UnivariateKernel::gaussian(1.0);
  const auto kg = PairwiseKernel::induced(g);
  for (int i = 0; i < 10; ++i) {
    const Point a = p1(rng.uniform(-1, 1)), b = p1(rng.uniform(-1, 1));
    CHECK(kg({a, b}, {a, b}) == doctest::Approx(2.0 - 2.0 * g(a, b)).epsilon(1e-14));
  }
}

TEST_CASE("induced linear kernel on unit intervals") {
  const auto k = PairwiseKernel::induced(UnivariateKernel::linear());
  CHECK(k({p1(1), p1(0)}, {p1(1), p1(0)}) == 1.0);
}

TEST_CASE("antisymmetry under swapping within a pair") {
  const auto k = PairwiseKernel::induced(UnivariateKernel::laplace(0.7));
  RngStream rng(17);
  for (int i = 0; i < 20; ++i) {
    const PairPoint p{p1(rng.uniform(-1, 1)), p1(rng.uniform(-1, 1))};
    const PairPoint q{p1(rng.uniform(-1, 1)), p1(rng.uniform(-1, 1))};
    const PairPoint swapped{p.second, p.first};
    CHECK(k(swapped, q) == doctest::Approx(-k(p, q)).epsilon(1e-14));
  }
}

TEST_CASE("kappa closed forms") {
  const Box box(p1(-1.0), p1(1.0));

  const auto kg = PairwiseKernel::induced(UnivariateKernel::gaussian(0.5));
  const KappaBound bg = kappa(kg, box);
  CHECK(bg.analytic);
  CHECK(bg.value <= std::sqrt(2.0) + 1e-15);
  CHECK(bg.value == doctest::Approx(std::sqrt(2.0 - 2.0 * std::exp(-4.0 / 0.5))).epsilon(1e-14));

  const auto kl = PairwiseKernel::induced(UnivariateKernel::linear());
  CHECK(kappa(kl, box).value == doctest::Approx(2.0).epsilon(1e-14));

  const auto kd = PairwiseKernel::direct_gaussian(1.0);
  CHECK(kappa(kd, box).value == 1.0);

  // single-point domain, equal pair: induced kernel vanishes there
  const std::vector<Point> single{p1(0.3)};
  CHECK(kappa(kg, single).value == 0.0);

  CHECK_THROWS_AS(kappa(kg, std::vector<Point>{}), input_error);
}

TEST_CASE("kappa lattice value dominates a 10x denser verification grid") {
  const auto k = PairwiseKernel::induced(UnivariateKernel::polynomial(2, 0.5));
  const Box box(p1(-1.0), p1(1.0));
  const KappaBound b = kappa(k, box, 64);
  CHECK_FALSE(b.analytic);
  double dense_max = 0.0;
  for (const Point& x : lattice(box, 640))
    for (const Point& y : lattice(box, 640)) {
      const PairPoint p{x, y};
      dense_max = std::max(dense_max, std::sqrt(std::max(k(p, p), 0.0)));
    }
  CHECK(b.value >= dense_max);
}

TEST_CASE("gram matrices are symmetric PSD within tolerance") {
  const auto g = UnivariateKernel::gaussian(1.0);

  const Eigen::MatrixXd single = gram(g, {p1(0.2)});
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == 1.0);

  // duplicated point: rank-deficient but PSD
  const Eigen::MatrixXd dup = gram(g, {p1(0.2), p1(0.2), p1(-0.4)});
  CHECK(dup == dup.transpose());
  CHECK(min_eigenvalue(dup) >= -psd_tolerance(dup));
  CHECK(std::abs(min_eigenvalue(dup)) < 1e-12 * dup.trace());

  RngStream rng(23);
  const auto ki = PairwiseKernel::induced(g);
  std::vector<PairPoint> pairs;
  for (int i = 0; i < 5; ++i)
    pairs.push_back({p1(rng.uniform(-1, 1)), p1(rng.uniform(-1, 1))});
  const Eigen::MatrixXd gp = gram(ki, pairs);
  CHECK(gp == gp.transpose());
  CHECK(min_eigenvalue(gp) >= -psd_tolerance(gp));
}

TEST_CASE("gram PSD property across kernels and sizes") {
  RngStream rng(99);
  for (const auto& spec : {"gaussian:1", "laplace:0.8", "linear", "poly:2:1"}) {
    const auto g = UnivariateKernel::parse(spec);
    for (int n : {3, 17, 50}) {
      const Eigen::MatrixXd mat = gram(g, random_points(rng, n));
      CHECK(min_eigenvalue(mat) >= -psd_tolerance(mat));
    }
  }
  for (const auto& spec : {"induced(gaussian:0.5)", "direct-gaussian:1", "direct-laplace:1"}) {
    const auto k = PairwiseKernel::parse(spec);
    std::vector<PairPoint> pairs;
    for (int i = 0; i < 24; ++i)
      pairs.push_back({p1(rng.uniform(-1, 1)), p1(rng.uniform(-1, 1))});
    const Eigen::MatrixXd mat = gram(k, pairs);
    CHECK(min_eigenvalue(mat) >= -psd_tolerance(mat));
  }
}

TEST_CASE("kernel spec strings round-trip") {
  for (const auto& spec : {"gaussian:0.5", "laplace:1.5", "linear", "poly:3:0.25"}) {
    const auto k = UnivariateKernel::parse(spec);
    const auto k2 = UnivariateKernel::parse(k.spec_string());
    CHECK(k2(p1(0.3), p1(-0.7)) == k(p1(0.3), p1(-0.7)));
  }
  for (const auto& spec : {"induced(gaussian:0.5)", "induced(linear)", "direct-laplace:2"}) {
    const auto k = PairwiseKernel::parse(spec);
    const auto k2 = PairwiseKernel::parse(k.spec_string());
    const PairPoint p{p1(0.1), p1(0.9)}, q{p1(-0.4), p1(0.2)};
    CHECK(k2(p, q) == k(p, q));
  }
  CHECK_THROWS_AS(UnivariateKernel::parse("gaussian"), input_error);
  CHECK_THROWS_AS(UnivariateKernel::parse("rbf:1"), input_error);
  CHECK_THROWS_AS(PairwiseKernel::parse("induced(rbf:1)"), input_error);
  CHECK_THROWS_AS(UnivariateKernel::gaussian(-1.0), input_error);
}
