#include "opera/checks.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

namespace opera {

using json = nlohmann::json;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, double a, double b, double c = 0, double d = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

}  // namespace

void CheckReport::record(double margin, const std::string& description) {
  ++n_cases;
  worst_margin = std::min(worst_margin, margin);
  if (margin < 0.0) {
    ++n_violations;
    if (violations.size() < 8) violations.push_back(description);
  }
}

std::string reports_to_json(const std::vector<CheckReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    json j;
    j["check"] = r.check;
    json params = json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    j["parameters"] = std::move(params);
    j["n_cases"] = r.n_cases;
    j["n_violations"] = r.n_violations;
    j["worst_margin"] = r.worst_margin;
    j["wall_time"] = r.wall_time;
    if (!r.note.empty()) j["note"] = r.note;
    if (!r.violations.empty()) j["violations"] = r.violations;
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

std::vector<CheckReport> lemma_sum_checks(double theta, double mu, int t_max) {
  if (!(theta > 0.5 && theta < 1.0)) throw input_error("lemma_sum_checks: theta must lie in (1/2,1)");
  if (t_max < 4) throw input_error("lemma_sum_checks: t_max must be >= 4");
  Stopwatch clock;

  const BoundConstants c = constants(theta, mu, 1.0, 1.0, 0.0);
  const double expo = std::min(theta - 0.5, (1.0 - theta) / 2.0);

  std::vector<double> gamma(static_cast<std::size_t>(t_max) + 1, 0.0);
  std::vector<double> prefix(static_cast<std::size_t>(t_max) + 1, 0.0);  // sum_{l=2}^{j} gamma_l
  for (int j = 1; j <= t_max; ++j) {
    gamma[static_cast<std::size_t>(j)] = std::pow(static_cast<double>(j), -theta) / mu;
    prefix[static_cast<std::size_t>(j)] =
        (j >= 2 ? prefix[static_cast<std::size_t>(j) - 1] + gamma[static_cast<std::size_t>(j)] : 0.0);
  }

  CheckReport r7a, r7b, r8a, r8b;
  r7a.check = "lemma7-sum-stated";
  r7a.note = "numerator (1 + sum gamma) as displayed in the lemma";
  r7b.check = "lemma7-sum-applied";
  r7b.note = "numerator (1 + sqrt(sum gamma)) as used in the sample-error estimate";
  r8a.check = "lemma8-sum-stated";
  r8a.note = "numerator (1 + (sum gamma)^2) as displayed in the lemma";
  r8b.check = "lemma8-sum-applied";
  r8b.note = "numerator (1 + sum gamma) as used in the martingale estimate";
  for (CheckReport* r : {&r7a, &r7b, &r8a, &r8b}) {
    r->parameters = {{"theta", theta}, {"mu", mu}, {"t_max", static_cast<double>(t_max)}};
  }

  for (int t = 4; t <= t_max; ++t) {
    double s7a = 0.0, s7b = 0.0, s8a = 0.0, s8b = 0.0;
    const double pt = prefix[static_cast<std::size_t>(t)];
    for (int j = 2; j <= t; ++j) {
      const double gj = gamma[static_cast<std::size_t>(j)];
      const double head = prefix[static_cast<std::size_t>(j) - 1];  // sum_{l=2}^{j-1}
      const double tail = pt - prefix[static_cast<std::size_t>(j)]; // sum_{l=j+1}^{t}
      const double den7 = std::sqrt(static_cast<double>(j)) * std::sqrt(1.0 + tail);
      s7a += gj * (1.0 + head) / den7;
      s7b += gj * (1.0 + std::sqrt(head)) / den7;
      const double den8 = 1.0 + tail;
      s8a += gj * gj * (1.0 + head * head) / den8;
      s8b += gj * gj * (1.0 + head) / den8;
    }
    s8a = std::sqrt(s8a);
    s8b = std::sqrt(s8b);
    const double pow_log = std::pow(static_cast<double>(t), -expo) * std::log(static_cast<double>(t));
    const double rhs7 = c.c_theta * pow_log;
    const double rhs8 = c.c_theta_tilde * pow_log;
    r7a.record(rhs7 - s7a, fmt("t=%.0f lhs=%.6g rhs=%.6g", t, s7a, rhs7));
    r7b.record(rhs7 - s7b, fmt("t=%.0f lhs=%.6g rhs=%.6g", t, s7b, rhs7));
    r8a.record(rhs8 - s8a, fmt("t=%.0f lhs=%.6g rhs=%.6g", t, s8a, rhs8));
    r8b.record(rhs8 - s8b, fmt("t=%.0f lhs=%.6g rhs=%.6g", t, s8b, rhs8));
  }

  CheckReport r9 = lemma9_sandwich(theta, mu, t_max);
  const double wt = clock.seconds();
  std::vector<CheckReport> out{r7a, r7b, r8a, r8b, r9};
  for (auto& r : out) r.wall_time = wt;
  return out;
}

CheckReport lemma9_sandwich(double theta, double mu, int t_max) {
  if (!(theta > 0.0 && theta < 1.0)) throw input_error("lemma9_sandwich: theta must lie in (0,1)");
  CheckReport r;
  r.check = "lemma9-sandwich";
  r.parameters = {{"theta", theta}, {"mu", mu}, {"t_max", static_cast<double>(t_max)}};

  std::vector<double> cum(static_cast<std::size_t>(t_max) + 1, 0.0);  // sum_{l=1}^{j}
  for (int j = 1; j <= t_max; ++j)
    cum[static_cast<std::size_t>(j)] =
        cum[static_cast<std::size_t>(j) - 1] + std::pow(static_cast<double>(j), -theta) / mu;

  std::vector<int> js;
  for (int j = 1; j <= t_max; j = (j < 8 ? j + 1 : j * 2)) js.push_back(j);
  const double c = 1.0 / (mu * (1.0 - theta));
  for (int j : js) {
    std::vector<int> ks{j, j + 1, j + 2, j + 7, 2 * j, 4 * j, t_max};
    for (int k : ks) {
      if (k < j || k > t_max) continue;
      const double s = cum[static_cast<std::size_t>(k)] - cum[static_cast<std::size_t>(j) - 1];
      const double lower = c * (std::pow(k + 1.0, 1.0 - theta) - std::pow(static_cast<double>(j), 1.0 - theta));
      const double upper = c * (std::pow(static_cast<double>(k), 1.0 - theta) - std::pow(j - 1.0, 1.0 - theta));
      r.record(std::min(s - lower, upper - s),
               fmt("j=%.0f k=%.0f sum=%.6g", j, k, s));
    }
  }
  return r;
}

CheckReport operator_product_norm_check(double beta, double theta, double mu, int dim, int trials,
                                        int windows, std::uint64_t seed) {
  if (dim > 50) throw input_error("operator_product_norm_check: dim must be <= 50");
  if (!(beta > 0.0)) throw input_error("operator_product_norm_check: beta must be positive");
  Stopwatch clock;
  CheckReport r;
  r.check = "lemma2-operator-product-norm";
  r.parameters = {{"beta", beta},   {"theta", theta},  {"mu", mu},
                  {"dim", static_cast<double>(dim)}, {"trials", static_cast<double>(trials)},
                  {"windows", static_cast<double>(windows)}};
  RngStream rng(seed);
  const double kappa_sq = mu;  // regime kappa^2 = mu, so gamma_l ||A|| <= 1
  const double front = std::pow(beta / M_E, beta) + std::pow(kappa_sq, beta);

  for (int trial = 0; trial < trials; ++trial) {
    Eigen::MatrixXd gauss(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) gauss(i, j) = rng.normal();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
    Eigen::VectorXd evals(dim);
    for (int i = 0; i < dim; ++i) evals[i] = kappa_sq * rng.uniform01();
    if (rng.uniform01() < 0.3) evals[0] = kappa_sq;  // exercise the ||A|| = kappa^2 edge
    Eigen::MatrixXd a = q * evals.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    Eigen::VectorXd powed = es.eigenvalues();
    for (int i = 0; i < dim; ++i) powed[i] = std::pow(std::max(powed[i], 0.0), beta);
    const Eigen::MatrixXd a_beta = es.eigenvectors() * powed.asDiagonal() * es.eigenvectors().transpose();

    for (int w = 0; w < windows; ++w) {
      const int j = 1 + static_cast<int>(rng.index(50));
      const int t = j + static_cast<int>(rng.index(250));
      Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(dim, dim);
      double gamma_sum = 0.0;
      for (int l = j; l <= t; ++l) {
        const double g = std::pow(static_cast<double>(l), -theta) / mu;
        gamma_sum += g;
        prod = prod * (Eigen::MatrixXd::Identity(dim, dim) - g * a);
      }
      const Eigen::MatrixXd m = prod * a_beta;
      const double lhs = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
      const double rhs = front * std::min(1.0, std::pow(gamma_sum, -beta));
      r.record(rhs - lhs + 1e-12 * rhs, fmt("j=%.0f t=%.0f lhs=%.6g rhs=%.6g", j, t, lhs, rhs));
    }
  }
  r.wall_time = clock.seconds();
  return r;
}

CheckReport concentration_coverage(ConcentrationKind kind, ConcentrationDist dist, int dim, int t,
                                   double delta, int n_trials, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw input_error("concentration_coverage: delta must lie in (0,1)");
  if (n_trials < 100) throw input_error("concentration_coverage: need at least 100 trials");
  Stopwatch clock;
  CheckReport r;
  r.check = kind == ConcentrationKind::bennett ? "lemma3-bennett-coverage" : "lemma4-pinelis-coverage";
  r.parameters = {{"dim", static_cast<double>(dim)},
                  {"t", static_cast<double>(t)},
                  {"delta", delta},
                  {"n_trials", static_cast<double>(n_trials)}};
  RngStream rng(seed);

  const double log2d = std::log(2.0 / delta);
  const double scale = 1.0;
  long exceed = 0;

  Eigen::VectorXd mean_vec = Eigen::VectorXd::Zero(dim);
  if (dist == ConcentrationDist::constant_vector)
    mean_vec = Eigen::VectorXd::Constant(dim, scale / std::sqrt(static_cast<double>(dim)));

  auto draw = [&](Eigen::VectorXd& xi) {
    switch (dist) {
      case ConcentrationDist::rademacher_scalar:
        xi.setZero();
        xi[0] = scale * rng.sign();
        break;
      case ConcentrationDist::sphere: {
        for (int i = 0; i < dim; ++i) xi[i] = rng.normal();
        xi *= scale / xi.norm();
        break;
      }
      case ConcentrationDist::constant_vector:
        xi = mean_vec;
        break;
    }
  };

  if (kind == ConcentrationKind::bennett) {
    const double bound = 2.0 * scale * log2d / t + scale * std::sqrt(log2d / t);
    Eigen::VectorXd xi(dim), acc(dim);
    for (int trial = 0; trial < n_trials; ++trial) {
      acc.setZero();
      for (int i = 0; i < t; ++i) {
        draw(xi);
        acc += xi;
      }
      const double dev = (acc / t - mean_vec).norm();
      if (dev > bound) ++exceed;
    }
  } else {
    // martingale S_k = eps_k v with a fixed unit direction v
    const double sigma_t = scale * std::sqrt(static_cast<double>(t));
    const double bound = 2.0 * (scale / 3.0 + sigma_t) * log2d;
    for (int trial = 0; trial < n_trials; ++trial) {
      double walk = 0.0, sup = 0.0;
      for (int k = 0; k < t; ++k) {
        walk += rng.sign();
        sup = std::max(sup, std::abs(walk) * scale);
      }
      if (sup > bound) ++exceed;
    }
  }

  const double freq = static_cast<double>(exceed) / n_trials;
  const double threshold = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / n_trials);
  r.n_cases = n_trials;
  r.n_violations = freq > threshold ? 1 : 0;
  r.worst_margin = threshold - freq;
  r.note = fmt("empirical violation frequency %.5f vs threshold %.5f", freq, threshold);
  if (r.n_violations) r.violations.push_back(r.note);
  r.parameters.emplace_back("empirical_frequency", freq);
  r.parameters.emplace_back("threshold", threshold);
  r.wall_time = clock.seconds();
  return r;
}

namespace {

// Grid representation of K_{(x,y)} on the support-pair grid, for section
// centers that are themselves support points.
Eigen::VectorXd section_grid(const SpectralModel& model, const Eigen::MatrixXd& support_gram, int sx,
                             int sy) {
  const int m = model.support_size();
  Eigen::VectorXd out(model.grid_size());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      out[model.grid_index(a, b)] =
          support_gram(sx, a) + support_gram(sy, b) - support_gram(sx, b) - support_gram(sy, a);
  return out;
}

Eigen::VectorXd section_grid_generic(const SpectralModel& model, const PairwiseKernel& k,
                                     const Point& x, const Point& y) {
  Eigen::VectorXd out(model.grid_size());
  const PairPoint c{x, y};
  for (int i = 0; i < model.grid_size(); ++i) out[i] = k(c, model.grid_pair(i));
  return out;
}

struct SectionHelper {
  const SpectralModel& model;
  const PairwiseKernel& kernel;
  Eigen::MatrixXd support_gram;  // univariate, induced case only

  explicit SectionHelper(const SpectralModel& m)
      : model(m), kernel(m.kernel()) {
    if (kernel.is_induced()) support_gram = gram(kernel.base(), m.measure().support());
  }

  Eigen::VectorXd operator()(const Sample& x, const Sample& y) const {
    if (kernel.is_induced() && x.support_index >= 0 && y.support_index >= 0)
      return section_grid(model, support_gram, x.support_index, y.support_index);
    return section_grid_generic(model, kernel, x.x, y.x);
  }
};

}  // namespace

DecompositionReport decomposition_residual(const PairwiseKernel& kernel, const DiscreteMeasure& meas,
                                           const Schedule& schedule, int T, std::uint64_t seed) {
  if (T < 2) throw input_error("decomposition_residual: T must be >= 2");
  const SpectralModel model(kernel, meas);
  const Eigen::VectorXd target = model.target_grid();
  const SectionHelper section(model);
  const int m = meas.size();
  const int n = model.grid_size();

  DirectEngine engine(kernel, T, true);
  std::vector<int> cols;
  for (const auto& u : meas.support()) cols.push_back(engine.register_eval_point(u));

  auto engine_grid = [&]() {
    Eigen::VectorXd f(n);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) f[model.grid_index(a, b)] = engine.evaluate_registered(cols[a], cols[b]);
    return f;
  };

  RngStream rng(seed);
  engine.seed_history(meas.sample(rng));

  const Eigen::VectorXd lk_target = model.apply(target);
  std::vector<double> gammas;
  std::vector<Eigen::VectorXd> a_terms, b_terms;
  DecompositionReport rep;
  rep.T = T;

  for (int t = 2; t <= T; ++t) {
    const Eigen::VectorXd f_t = engine_grid();
    const Sample z = meas.sample(rng);
    const double gamma = schedule.gamma(t);
    const auto& hist = engine.history();
    const double inv = 1.0 / static_cast<double>(t - 1);

    Eigen::VectorXd lhat_f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd shat = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd ltilde_f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd stilde = Eigen::VectorXd::Zero(n);

    for (int j = 0; j < t - 1; ++j) {
      const Eigen::VectorXd sec = section(z, hist[static_cast<std::size_t>(j)]);
      const double f_val = engine.evaluate_registered(cols[static_cast<std::size_t>(z.support_index)],
                                                      cols[static_cast<std::size_t>(hist[j].support_index)]);
      lhat_f += inv * f_val * sec;
      shat += inv * (z.y - hist[static_cast<std::size_t>(j)].y) * sec;
    }
    for (int l = 0; l < t - 1; ++l) {
      const Sample& zl = hist[static_cast<std::size_t>(l)];
      for (int a = 0; a < m; ++a) {
        Sample ua;
        ua.x = meas.support()[static_cast<std::size_t>(a)];
        ua.support_index = a;
        const Eigen::VectorXd sec = section(ua, zl);
        const double f_val = engine.evaluate_registered(cols[static_cast<std::size_t>(a)],
                                                        cols[static_cast<std::size_t>(zl.support_index)]);
        const double pa = meas.probs()[a];
        ltilde_f += inv * pa * f_val * sec;
        stilde += inv * pa * (meas.f_rho_values()[a] - zl.y) * sec;
      }
    }

    const Eigen::VectorXd lk_f = model.apply(f_t);
    const Eigen::VectorXd a_term = (ltilde_f - lk_f) - (stilde - lk_target);
    const Eigen::VectorXd b_term = (lhat_f - ltilde_f) - (shat - stilde);

    engine.step(z, gamma);
    const Eigen::VectorXd f_next = engine_grid();

    const Eigen::VectorXd err_prev = f_t - target;
    const Eigen::VectorXd rhs = err_prev - gamma * model.apply(err_prev) - gamma * a_term - gamma * b_term;
    const double resid = (f_next - target - rhs).cwiseAbs().maxCoeff();
    rep.max_onestep_residual = std::max(rep.max_onestep_residual, resid);

    gammas.push_back(gamma);
    a_terms.push_back(a_term);
    b_terms.push_back(b_term);
  }

  // unrolled form at the final step, products evaluated per summand
  auto apply_window = [&](Eigen::VectorXd v, int from) {
    for (std::size_t idx = static_cast<std::size_t>(from); idx < gammas.size(); ++idx)
      v -= gammas[idx] * model.apply(v);
    return v;
  };
  Eigen::VectorXd rhs = -apply_window(target, 0);
  for (std::size_t idx = 0; idx < gammas.size(); ++idx) {
    rhs -= gammas[idx] * apply_window(a_terms[idx], static_cast<int>(idx) + 1);
    rhs -= gammas[idx] * apply_window(b_terms[idx], static_cast<int>(idx) + 1);
  }
  rep.unrolled_residual = (engine_grid() - target - rhs).cwiseAbs().maxCoeff();
  return rep;
}

CheckReport DecompositionReport::as_report(double onestep_tol, double unrolled_tol) const {
  CheckReport r;
  r.check = "error-decomposition-residual";
  r.parameters = {{"T", static_cast<double>(T)},
                  {"max_onestep_residual", max_onestep_residual},
                  {"unrolled_residual", unrolled_residual}};
  r.record(onestep_tol - max_onestep_residual, fmt("one-step residual %.3g tol %.3g", max_onestep_residual, onestep_tol));
  r.record(unrolled_tol - unrolled_residual, fmt("unrolled residual %.3g tol %.3g", unrolled_residual, unrolled_tol));
  return r;
}

CheckReport martingale_mean_check(const PairwiseKernel& kernel, const DiscreteMeasure& meas,
                                  const Schedule& schedule, int t_fix, int n_resample,
                                  std::uint64_t seed) {
  if (t_fix < 2) throw input_error("martingale_mean_check: t_fix must be >= 2");
  Stopwatch clock;
  const SpectralModel model(kernel, meas);
  const SectionHelper section(model);
  const int m = meas.size();
  const int n = model.grid_size();

  DirectEngine engine(kernel, t_fix, true);
  std::vector<int> cols;
  for (const auto& u : meas.support()) cols.push_back(engine.register_eval_point(u));

  RngStream rng(seed);
  engine.seed_history(meas.sample(rng));
  for (int t = 2; t < t_fix; ++t) engine.step(meas.sample(rng), schedule.gamma(t));
  // engine now holds f_{t_fix} built from z_1..z_{t_fix - 1}

  const auto& hist = engine.history();
  const double inv = 1.0 / static_cast<double>(t_fix - 1);

  Eigen::VectorXd ltilde_f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd stilde = Eigen::VectorXd::Zero(n);
  for (int l = 0; l < t_fix - 1; ++l) {
    const Sample& zl = hist[static_cast<std::size_t>(l)];
    for (int a = 0; a < m; ++a) {
      Sample ua;
      ua.x = meas.support()[static_cast<std::size_t>(a)];
      ua.support_index = a;
      const Eigen::VectorXd sec = section(ua, zl);
      const double f_val = engine.evaluate_registered(cols[static_cast<std::size_t>(a)],
                                                      cols[static_cast<std::size_t>(zl.support_index)]);
      ltilde_f += inv * meas.probs()[a] * f_val * sec;
      stilde += inv * meas.probs()[a] * (meas.f_rho_values()[a] - zl.y) * sec;
    }
  }

  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(n_resample));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (int rdx = 0; rdx < n_resample; ++rdx) {
    const Sample z = meas.sample(rng);
    Eigen::VectorXd lhat_f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd shat = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < t_fix - 1; ++j) {
      const Eigen::VectorXd sec = section(z, hist[static_cast<std::size_t>(j)]);
      const double f_val = engine.evaluate_registered(cols[static_cast<std::size_t>(z.support_index)],
                                                      cols[static_cast<std::size_t>(hist[j].support_index)]);
      lhat_f += inv * f_val * sec;
      shat += inv * (z.y - hist[static_cast<std::size_t>(j)].y) * sec;
    }
    Eigen::VectorXd b = (lhat_f - ltilde_f) - (shat - stilde);
    mean += b;
    draws.push_back(std::move(b));
  }
  mean /= static_cast<double>(n_resample);

  double var_acc = 0.0;
  for (const auto& b : draws) {
    const double d = model.rho_norm(b - mean);
    var_acc += d * d;
  }
  const double se = std::sqrt(var_acc / (static_cast<double>(n_resample) - 1.0) / n_resample);
  const double mean_norm = model.rho_norm(mean);

  CheckReport r;
  r.check = "martingale-conditional-mean";
  r.parameters = {{"t_fix", static_cast<double>(t_fix)},
                  {"n_resample", static_cast<double>(n_resample)},
                  {"mean_norm", mean_norm},
                  {"stderr", se}};
  r.record(5.0 * se - mean_norm, fmt("||mean B||=%.3g stderr=%.3g", mean_norm, se));
  r.note = "E(B^t | history) should vanish; comparing the resampled mean against 5x its standard error";
  r.wall_time = clock.seconds();
  return r;
}

}  // namespace opera
