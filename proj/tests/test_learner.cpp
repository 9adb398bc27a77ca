#include <doctest.h>

#include <cmath>

#include "opera/learner.hpp"
#include "opera/presets.hpp"

using namespace opera;

namespace {

Point p1(double x) { return point1d(x); }

Sample sample_at(double x, double y, int idx = -1) {
  Sample s;
  s.x = p1(x);
  s.y = y;
  s.support_index = idx;
  return s;
}

const PairwiseKernel kGauss = PairwiseKernel::induced(UnivariateKernel::gaussian(0.5));

}  // namespace

TEST_CASE("schedule") {
  const Schedule s(2.0 / 3.0, 2.0);
  CHECK(Schedule(0.5, 4.0).gamma(1) == 0.25);
  CHECK(s.gamma(8) == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
  CHECK_THROWS_AS(Schedule(1.5, 1.0), input_error);
  CHECK_THROWS_AS(Schedule(0.5, -1.0), input_error);
  CHECK_THROWS_AS(s.gamma(0), input_error);

  // mu >= kappa^2 forces gamma_t kappa^2 <= 1, and gamma is nonincreasing
  const double kappa_sq = 1.9;
  const Schedule s2(0.6, kappa_sq);
  double prev = 1e300;
  for (int t = 1; t <= 2000; ++t) {
    const double g = s2.gamma(t);
    CHECK(g * kappa_sq <= 1.0 + 1e-15);
    CHECK(g <= prev);
    prev = g;
  }
}

TEST_CASE("first gradient step produces the single forced term") {
  DirectEngine engine(kGauss, 10);
  CHECK_THROWS_AS(engine.step(sample_at(0.0, 0.0), 0.5), state_error);
  engine.seed_history(sample_at(0.2, 0.7));
  const double gamma2 = 0.4;
  engine.step(sample_at(-0.5, -0.1), gamma2);

  CHECK(engine.term_count() == 1);
  CHECK(engine.last_added_terms() == 1);
  const PairwiseExpansion f3 = engine.snapshot();
  // f_3 = gamma_2 (y_2 - y_1) K_{(x_2, x_1)}
  CHECK(f3.coefficients()[0] == doctest::Approx(gamma2 * (-0.1 - 0.7)).epsilon(1e-14));
  RngStream rng(6);
  for (int i = 0; i < 10; ++i) {
    const PairPoint q{p1(rng.uniform(-1, 1)), p1(rng.uniform(-1, 1))};
    const double expect = gamma2 * (-0.8) * kGauss(PairPoint{p1(-0.5), p1(0.2)}, q);
    CHECK(f3.evaluate(q) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("two steps with the linear induced kernel match the hand unroll") {
  const PairwiseKernel k = PairwiseKernel::induced(UnivariateKernel::linear());
  const double x1 = 0.5, y1 = 0.2, x2 = -1.0, y2 = -0.3, x3 = 0.25, y3 = 0.1;
  const double g2 = 0.37, g3 = 0.21;

  DirectEngine engine(k, 10);
  engine.seed_history(sample_at(x1, y1));
  engine.step(sample_at(x2, y2), g2);
  engine.step(sample_at(x3, y3), g3);
  CHECK(engine.term_count() == 3);

  // hand unroll: with K((u,v),(a,b)) = (u-v)(a-b) every iterate is
  // c * (a-b) for a scalar c
  const double c3 = g2 * (y2 - y1) * (x2 - x1);
  const double r1 = c3 * (x3 - x1) - y3 + y1;
  const double r2 = c3 * (x3 - x2) - y3 + y2;
  const double c4 = c3 - 0.5 * g3 * (r1 * (x3 - x1) + r2 * (x3 - x2));

  const PairwiseExpansion f4 = engine.snapshot();
  RngStream rng(12);
  for (int i = 0; i < 10; ++i) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    CHECK(f4.evaluate(PairPoint{p1(a), p1(b)}) == doctest::Approx(c4 * (a - b)).epsilon(1e-12));
  }
  // the norm bookkeeping matches the closed form |c| * |K|^(1/2) route
  CHECK(engine.rkhs_norm() == doctest::Approx(f4.rkhs_norm()).epsilon(1e-9));
}

TEST_CASE("reduced step t=2 and value cache") {
  const PairwiseKernel k = kGauss;
  ReducedEngine engine(k, 50);
  engine.seed_history(sample_at(0.3, 1.0));
  engine.step(sample_at(-0.4, 0.25), 0.5);
  // g_3 = gamma_2 (y_2 - y_1)(G_{x_2} - G_{x_1})
  CHECK(engine.center_count() == 2);
  const UnivariateExpansion g3 = engine.snapshot();
  const auto& g = k.base();
  RngStream rng(3);
  for (int i = 0; i < 10; ++i) {
    const Point q = p1(rng.uniform(-1, 1));
    const double expect = 0.5 * (0.25 - 1.0) * (g(p1(-0.4), q) - g(p1(0.3), q));
    CHECK(g3.evaluate(q) == doctest::Approx(expect).epsilon(1e-13));
  }

  // a longer run: cache entries equal fresh evaluations of the snapshot
  const DiscreteMeasure meas = preset_discrete_measure(5, 0.1);
  ReducedEngine eng2(k, 120);
  RngStream sampler(71);
  eng2.seed_history(meas.sample(sampler));
  const Schedule sched(2.0 / 3.0, 2.0);
  for (int t = 2; t <= 120; ++t) {
    eng2.step(meas.sample(sampler), sched.gamma(t));
    if (t % 30 == 0 || t == 120) {
      const UnivariateExpansion snap = eng2.snapshot();
      const auto& hist = eng2.history();
      for (std::size_t i = 0; i < hist.size(); ++i) {
        const double fresh = snap.evaluate(hist[i].x);
        CHECK(std::abs(eng2.value_cache()[i] - fresh) <= 1e-9 * (1.0 + std::abs(fresh)));
      }
      CHECK(eng2.rkhs_norm() == doctest::Approx(snap.rkhs_norm()).epsilon(1e-9));
    }
  }
}

TEST_CASE("reduced mode requires an induced kernel") {
  CHECK_THROWS_AS(ReducedEngine(PairwiseKernel::direct_gaussian(1.0), 10), config_error);
}

TEST_CASE("direct and reduced recursions agree through the recovery map") {
  const DiscreteMeasure meas = preset_discrete_measure(5, 0.1);
  const double kap = kappa(kGauss, meas.support()).value;
  const std::vector<PairPoint> probes = default_probe_pairs(meas, 25, 99);

  for (std::uint64_t seed : {11ULL, 12ULL}) {
    RunSpec spec;
    spec.T = 120;
    spec.schedule = Schedule(2.0 / 3.0, kap * kap);
    spec.record_at = resolve_record_at({}, spec.T, true);
    spec.probes = probes;

    spec.mode = RunMode::opera_direct;
    const RunResult direct = run(kGauss, meas, spec, seed);
    spec.mode = RunMode::opera_reduced;
    const RunResult reduced = run(kGauss, meas, spec, seed);

    REQUIRE(direct.rows.size() == reduced.rows.size());
    for (std::size_t i = 0; i < direct.rows.size(); ++i) {
      for (std::size_t p = 0; p < probes.size(); ++p)
        CHECK(std::abs(direct.rows[i].probe_values[p] - reduced.rows[i].probe_values[p]) <= 1e-8);
      CHECK(std::abs(direct.rows[i].error_rho - reduced.rows[i].error_rho) <= 1e-8);
      CHECK(std::abs(direct.rows[i].norm_k - reduced.rows[i].norm_k) <= 1e-8);
    }
  }
}

TEST_CASE("both engines match a naive reference recursion") {
  // third route: the update applied literally through the generic expansion
  // type, one appended section per past sample, no caches of any kind
  const DiscreteMeasure meas = preset_discrete_measure(5, 0.1);
  const double kap = kappa(kGauss, meas.support()).value;
  const Schedule sched(2.0 / 3.0, kap * kap);
  const int T = 40;

  RngStream sampler(88);
  std::vector<Sample> stream;
  for (int i = 0; i < T; ++i) stream.push_back(meas.sample(sampler));

  PairwiseExpansion naive(kGauss);
  for (int t = 2; t <= T; ++t) {
    const Sample& zt = stream[static_cast<std::size_t>(t - 1)];
    std::vector<PairPoint> sections;
    Eigen::VectorXd coeffs(t - 1);
    for (int j = 0; j < t - 1; ++j) {
      const Sample& zj = stream[static_cast<std::size_t>(j)];
      const PairPoint c{zt.x, zj.x};
      const double residual = naive.evaluate(c) - zt.y + zj.y;
      sections.push_back(c);
      coeffs[j] = -sched.gamma(t) / (t - 1) * residual;
    }
    naive = naive.with_terms(sections, coeffs);
  }

  DirectEngine direct(kGauss, T);
  ReducedEngine reduced(kGauss, T);
  direct.seed_history(stream[0]);
  reduced.seed_history(stream[0]);
  for (int t = 2; t <= T; ++t) {
    direct.step(stream[static_cast<std::size_t>(t - 1)], sched.gamma(t));
    reduced.step(stream[static_cast<std::size_t>(t - 1)], sched.gamma(t));
  }

  RngStream rng(17);
  for (int i = 0; i < 20; ++i) {
    const PairPoint q{p1(rng.uniform(-1, 1)), p1(rng.uniform(-1, 1))};
    const double want = naive.evaluate(q);
    CHECK(direct.evaluate(q) == doctest::Approx(want).epsilon(1e-10));
    CHECK(reduced.evaluate_pair(q) == doctest::Approx(want).epsilon(1e-8));
  }
  CHECK(direct.rkhs_norm() == doctest::Approx(naive.rkhs_norm()).epsilon(1e-9));
}

TEST_CASE("expansion sizes follow the cost contract") {
  const DiscreteMeasure meas = preset_discrete_measure(4, 0.1);
  RngStream sampler(5);
  const Schedule sched(0.75, 2.0);

  DirectEngine direct(kGauss, 40);
  ReducedEngine reduced(kGauss, 40);
  direct.seed_history(meas.sample(sampler));
  RngStream sampler2(5);
  reduced.seed_history(meas.sample(sampler2));
  for (int t = 2; t <= 40; ++t) {
    direct.step(meas.sample(sampler), sched.gamma(t));
    reduced.step(meas.sample(sampler2), sched.gamma(t));
    CHECK(direct.last_added_terms() == static_cast<std::size_t>(t - 1));
    CHECK(direct.term_count() == static_cast<std::size_t>(t) * (t - 1) / 2);
    CHECK(reduced.center_count() == static_cast<std::size_t>(t));
  }
}

TEST_CASE("lemma 1 norm bound holds along trajectories") {
  const DiscreteMeasure meas = preset_discrete_measure(6, 0.2);
  const double kap = kappa(kGauss, meas.support()).value;
  for (double theta : {0.6, 0.75}) {
    RunSpec spec;
    spec.mode = RunMode::opera_reduced;
    spec.T = 400;
    spec.schedule = Schedule(theta, kap * kap);
    const RunResult res = run(kGauss, meas, spec, 21);
    CHECK(res.max_lemma1_excess <= 1e-9);
  }
  // the recorded bound column is the running 2 M sqrt(sum gamma)
  RunSpec spec;
  spec.mode = RunMode::opera_direct;
  spec.T = 50;
  spec.schedule = Schedule(0.6, kap * kap);
  spec.record_at = {35};
  const RunResult res = run(kGauss, meas, spec, 3);
  double acc = 0.0;
  for (int j = 2; j <= 34; ++j) acc += spec.schedule->gamma(j);
  CHECK(res.rows[0].lemma1_bound == doctest::Approx(2.0 * meas.label_bound() * std::sqrt(acc)).epsilon(1e-12));
  CHECK(res.rows[0].norm_k <= res.rows[0].lemma1_bound * (1.0 + 1e-9));
}

TEST_CASE("pogd projection contract") {
  const DiscreteMeasure meas = preset_discrete_measure(5, 0.1);
  const double kap = kappa(kGauss, meas.support()).value;

  RunSpec spec;
  spec.mode = RunMode::pogd;
  spec.T = 80;
  spec.schedule = Schedule(2.0 / 3.0, kap * kap);
  spec.eta_mode = EtaMode::schedule;

  // tight radius: the norm pins at R once the unprojected norm exceeds it
  spec.R = 0.01;
  const RunResult tight = run(kGauss, meas, spec, 31);
  CHECK(tight.max_radius_excess <= 1e-9);
  CHECK(tight.final_norm == doctest::Approx(0.01).epsilon(1e-9));

  // huge radius with matching steps: trajectory identical to unprojected OPERA
  spec.R = 1e6;
  const RunResult loose = run(kGauss, meas, spec, 31);
  RunSpec opera_spec = spec;
  opera_spec.mode = RunMode::opera_direct;
  const RunResult plain = run(kGauss, meas, opera_spec, 31);
  CHECK(loose.final_norm == doctest::Approx(plain.final_norm).epsilon(1e-15));
  CHECK(loose.final_error == doctest::Approx(plain.final_error).epsilon(1e-15));

  spec.R = -1.0;
  CHECK_THROWS_AS(run(kGauss, meas, spec, 31), config_error);
}

TEST_CASE("runs of length two record the zero hypothesis") {
  const DiscreteMeasure meas = preset_discrete_measure(4, 0.0);
  const PairwiseTarget target(meas);
  const double target_norm = rho_norm(target, meas).value;

  RunSpec spec;
  spec.mode = RunMode::opera_reduced;
  spec.T = 2;
  spec.schedule = Schedule(0.6, 2.0);
  spec.record_at = {1, 2};
  const RunResult res = run(kGauss, meas, spec, 17);
  REQUIRE(res.rows.size() == 2);
  for (const auto& row : res.rows) {
    CHECK(row.norm_k == 0.0);
    CHECK(row.error_rho == doctest::Approx(target_norm).epsilon(1e-14));
  }
  CHECK_THROWS_AS([&] {
    RunSpec bad = spec;
    bad.T = 1;
    return run(kGauss, meas, bad, 17);
  }(), input_error);
}

TEST_CASE("constant targets produce identically zero trajectories") {
  // all y_i equal and noiseless: every residual vanishes, f_t stays 0
  const DiscreteMeasure meas =
      DiscreteMeasure::uniform(linspace_points(-1, 1, 4), Eigen::VectorXd::Constant(4, 0.7), 0.0);
  RunSpec spec;
  spec.mode = RunMode::opera_reduced;
  spec.T = 60;
  spec.schedule = Schedule(0.6, 2.0);
  spec.record_at = {30, 61};
  const RunResult res = run(kGauss, meas, spec, 5);
  for (const auto& row : res.rows) {
    CHECK(row.norm_k == 0.0);
    CHECK(row.error_rho == 0.0);
  }
}

TEST_CASE("runs are deterministic given the seed") {
  const DiscreteMeasure meas = preset_discrete_measure(5, 0.15);
  RunSpec spec;
  spec.mode = RunMode::opera_reduced;
  spec.T = 90;
  spec.schedule = Schedule(2.0 / 3.0, 2.0);
  spec.record_at = resolve_record_at({}, spec.T, true);
  const RunResult a = run(kGauss, meas, spec, 1234);
  const RunResult b = run(kGauss, meas, spec, 1234);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].error_rho == b.rows[i].error_rho);
    CHECK(a.rows[i].norm_k == b.rows[i].norm_k);
  }
  const RunResult c = run(kGauss, meas, spec, 1235);
  CHECK(c.final_error != a.final_error);
}

TEST_CASE("recorded errors match recomputation from snapshots") {
  const DiscreteMeasure meas = preset_discrete_measure(5, 0.1);
  RunSpec spec;
  spec.mode = RunMode::opera_direct;
  spec.T = 60;
  spec.schedule = Schedule(2.0 / 3.0, 2.0);
  spec.record_at = {8, 31, 61};
  spec.keep_snapshots = true;
  const RunResult res = run(kGauss, meas, spec, 77);
  const PairwiseTarget target(meas);
  for (const auto& row : res.rows) {
    REQUIRE(row.snapshot.has_value());
    auto diff = [&](const Point& a, const Point& b) {
      return row.snapshot->evaluate(PairPoint{a, b}) - target(a, b);
    };
    CHECK(std::abs(rho_norm(diff, meas).value - row.error_rho) <= 1e-10);
    // the incrementally tracked norm agrees with the full quadratic form
    const auto plain = PairwiseExpansion::from_parts(row.snapshot->kernel(), row.snapshot->centers(),
                                                     row.snapshot->coefficients());
    CHECK(row.norm_k == doctest::Approx(plain.rkhs_norm()).epsilon(1e-9));
  }
}

TEST_CASE("non-uniform probabilities flow through both recursions") {
  Eigen::VectorXd probs(4), targets(4);
  probs << 0.1, 0.2, 0.3, 0.4;
  targets << 0.8, -0.5, 0.3, -0.1;
  const DiscreteMeasure meas(linspace_points(-1, 1, 4), probs, targets, 0.05);
  const double kap = kappa(kGauss, meas.support()).value;
  const std::vector<PairPoint> probes = default_probe_pairs(meas, 10, 1);

  RunSpec spec;
  spec.T = 60;
  spec.schedule = Schedule(2.0 / 3.0, kap * kap);
  spec.record_at = resolve_record_at({}, spec.T, true);
  spec.probes = probes;
  spec.mode = RunMode::opera_direct;
  const RunResult direct = run(kGauss, meas, spec, 6);
  spec.mode = RunMode::opera_reduced;
  const RunResult reduced = run(kGauss, meas, spec, 6);
  for (std::size_t i = 0; i < direct.rows.size(); ++i) {
    for (std::size_t p = 0; p < probes.size(); ++p)
      CHECK(std::abs(direct.rows[i].probe_values[p] - reduced.rows[i].probe_values[p]) <= 1e-8);
    CHECK(std::abs(direct.rows[i].error_rho - reduced.rows[i].error_rho) <= 1e-8);
  }
  CHECK(direct.max_lemma1_excess <= 1e-9);
}

TEST_CASE("direct mode on a sampler measure estimates errors by monte carlo") {
  const SamplerMeasure meas(Box(p1(-1.0), p1(1.0)), "sin-sum", 0.05);
  const double kap = kappa(kGauss, Box(p1(-1.0), p1(1.0))).value;
  RunSpec spec;
  spec.mode = RunMode::opera_direct;
  spec.T = 20;
  spec.schedule = Schedule(2.0 / 3.0, kap * kap);
  spec.record_at = {21};
  spec.mc_pairs = 500;
  const RunResult res = run(kGauss, meas, spec, 2);
  CHECK(std::isfinite(res.rows[0].error_rho));
  CHECK(res.rows[0].error_stderr > 0.0);
}

TEST_CASE("gram cache off reproduces the cached trajectory") {
  const DiscreteMeasure meas = preset_discrete_measure(4, 0.1);
  RunSpec spec;
  spec.mode = RunMode::opera_reduced;
  spec.T = 40;
  spec.schedule = Schedule(0.7, 2.0);
  spec.record_at = {41};
  const RunResult cached = run(kGauss, meas, spec, 8);
  spec.gram_cache = false;
  const RunResult plain = run(kGauss, meas, spec, 8);
  CHECK(cached.final_error == doctest::Approx(plain.final_error).epsilon(1e-12));

  RunSpec dspec = spec;
  dspec.mode = RunMode::opera_direct;
  dspec.gram_cache = true;
  const RunResult dc = run(kGauss, meas, dspec, 8);
  dspec.gram_cache = false;
  const RunResult dp = run(kGauss, meas, dspec, 8);
  CHECK(dc.final_error == doctest::Approx(dp.final_error).epsilon(1e-12));
}

TEST_CASE("direct engine supports non-induced kernels") {
  const PairwiseKernel k = PairwiseKernel::direct_gaussian(1.0);
  const DiscreteMeasure meas = preset_discrete_measure(4, 0.1);
  const double kap = kappa(k, meas.support()).value;
  RunSpec spec;
  spec.mode = RunMode::opera_direct;
  spec.T = 30;
  spec.schedule = Schedule(0.75, kap * kap);
  spec.record_at = {31};
  spec.keep_snapshots = true;
  const RunResult res = run(k, meas, spec, 4);
  CHECK(res.max_lemma1_excess <= 1e-9);
  const PairwiseTarget target(meas);
  auto diff = [&](const Point& a, const Point& b) {
    return res.rows[0].snapshot->evaluate(PairPoint{a, b}) - target(a, b);
  };
  CHECK(std::abs(rho_norm(diff, meas).value - res.rows[0].error_rho) <= 1e-10);
}

TEST_CASE("averaged iterate accumulates f_2..f_T") {
  const DiscreteMeasure meas = preset_discrete_measure(4, 0.1);
  RunSpec spec;
  spec.mode = RunMode::opera_reduced;
  spec.T = 2;  // only f_2 = 0 enters the average
  spec.schedule = Schedule(0.6, 2.0);
  spec.average_iterates = true;
  const RunResult res = run(kGauss, meas, spec, 9);
  const PairwiseTarget target(meas);
  CHECK(res.averaged_error == doctest::Approx(rho_norm(target, meas).value).epsilon(1e-12));
}
