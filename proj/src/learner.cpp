#include "opera/learner.hpp"

#include <algorithm>
#include <cmath>

namespace opera {

RunMode parse_run_mode(const std::string& name) {
  if (name == "opera-direct") return RunMode::opera_direct;
  if (name == "opera-reduced") return RunMode::opera_reduced;
  if (name == "pogd") return RunMode::pogd;
  throw config_error("unknown mode '" + name + "' (opera-direct, opera-reduced, pogd)");
}

std::string run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::opera_direct: return "opera-direct";
    case RunMode::opera_reduced: return "opera-reduced";
    case RunMode::pogd: return "pogd";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// DirectEngine

DirectEngine::DirectEngine(PairwiseKernel k, int t_max, bool cache_pair_table)
    : kernel_(std::move(k)), induced_(kernel_.is_induced()), cap_(t_max + 1), cached_(cache_pair_table) {
  if (t_max < 1) throw input_error("direct engine: t_max must be >= 1");
  if (!induced_) inv_sigma_ = 1.0 / kernel_.sigma();
  if (cached_) table_.assign(static_cast<std::size_t>(cap_) * cap_, 0.0);
  samples_.reserve(static_cast<std::size_t>(cap_));
}

int DirectEngine::register_eval_point(const Point& p) {
  if (!samples_.empty()) throw state_error("direct engine: eval points must be registered before samples");
  eval_points_.push_back(p);
  return static_cast<int>(eval_points_.size()) - 1;
}

double DirectEngine::entry(int i, int j) const {
  if (cached_) return table_[static_cast<std::size_t>(i) * cap_ + j];
  const Point& a = samples_[static_cast<std::size_t>(i)].x;
  const Point& b = samples_[static_cast<std::size_t>(j)].x;
  return induced_ ? kernel_.base()(a, b) : (a - b).squaredNorm();
}

double DirectEngine::ep_entry(int i, int c) const {
  return ep_table_[static_cast<std::size_t>(i) * eval_points_.size() + c];
}

double DirectEngine::pair_from(double sa, double lb, double sb, double la) const {
  if (induced_) return sa + lb - sb - la;
  const double d2 = sa + lb;
  if (kernel_.source() == PairwiseSource::direct_gaussian) return std::exp(-d2 * inv_sigma_);
  return std::exp(-std::sqrt(d2) * inv_sigma_);
}

void DirectEngine::add_sample(const Sample& z) {
  if (samples_seen() >= cap_) throw state_error("direct engine: capacity exceeded");
  const int r = samples_seen();
  samples_.push_back(z);
  if (cached_) {
    for (int i = 0; i <= r; ++i) {
      const Point& a = samples_[static_cast<std::size_t>(r)].x;
      const Point& b = samples_[static_cast<std::size_t>(i)].x;
      const double v = induced_ ? kernel_.base()(a, b) : (a - b).squaredNorm();
      table_[static_cast<std::size_t>(r) * cap_ + i] = v;
      table_[static_cast<std::size_t>(i) * cap_ + r] = v;
    }
  }
  for (std::size_t c = 0; c < eval_points_.size(); ++c) {
    const Point& a = samples_[static_cast<std::size_t>(r)].x;
    ep_table_.push_back(induced_ ? kernel_.base()(a, eval_points_[c])
                                 : (a - eval_points_[c]).squaredNorm());
  }
}

void DirectEngine::seed_history(const Sample& z1) {
  if (!samples_.empty()) throw state_error("direct engine: history already seeded");
  add_sample(z1);  // f_1 = f_2 = 0; z_1 only enters later gradients
}

void DirectEngine::step(const Sample& z, double gamma) {
  if (samples_.empty()) throw state_error("direct engine: step needs seeded history (t >= 2)");
  const int t = samples_seen() + 1;  // this call consumes z_t
  const int r = t - 1;               // 0-based index of the new sample
  add_sample(z);
  last_added_ = 0;

  const double y_t = z.y;
  const std::size_t n_terms = alpha_.size();
  std::vector<double> resid(static_cast<std::size_t>(t - 1));

  if (cached_ && induced_) {
    const double* row_t = &table_[static_cast<std::size_t>(r) * cap_];
    for (int j = 0; j < t - 1; ++j) {
      const double* row_j = &table_[static_cast<std::size_t>(j) * cap_];
      resid[static_cast<std::size_t>(j)] =
          term_sum_rows(row_t, row_j) - y_t + samples_[static_cast<std::size_t>(j)].y;
    }
  } else {
    for (int j = 0; j < t - 1; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_terms; ++k) {
        acc += alpha_[k] *
               pair_from(entry(first_[k], r), entry(second_[k], j), entry(first_[k], j), entry(second_[k], r));
      }
      resid[static_cast<std::size_t>(j)] = acc - y_t + samples_[static_cast<std::size_t>(j)].y;
    }
  }

  const double scale = -gamma / static_cast<double>(t - 1);

  // norm bookkeeping while f_t values are still at hand:
  // <f_t, delta> = sum_j alpha_new_j f_t(x_t, x_j) by the reproducing property
  double cross = 0.0;
  for (int j = 0; j < t - 1; ++j) {
    const double f_val = resid[static_cast<std::size_t>(j)] + y_t - samples_[static_cast<std::size_t>(j)].y;
    cross += scale * resid[static_cast<std::size_t>(j)] * f_val;
  }
  double delta_sq = 0.0;
  for (int j = 0; j < t - 1; ++j) {
    const double aj = scale * resid[static_cast<std::size_t>(j)];
    for (int j2 = 0; j2 < t - 1; ++j2) {
      const double a2 = scale * resid[static_cast<std::size_t>(j2)];
      delta_sq += aj * a2 * pair_from(entry(r, r), entry(j, j2), entry(r, j2), entry(j, r));
    }
  }
  sq_norm_ += 2.0 * cross + delta_sq;

  for (int j = 0; j < t - 1; ++j) {
    first_.push_back(r);
    second_.push_back(j);
    alpha_.push_back(scale * resid[static_cast<std::size_t>(j)]);
  }
  last_added_ = static_cast<std::size_t>(t - 1);
}

double DirectEngine::term_sum_rows(const double* row_t, const double* row_j) const {
  double acc = 0.0;
  const std::size_t n = alpha_.size();
  const int* fs = first_.data();
  const int* sc = second_.data();
  const double* al = alpha_.data();
  for (std::size_t k = 0; k < n; ++k) {
    acc += al[k] * (row_t[fs[k]] + row_j[sc[k]] - row_j[fs[k]] - row_t[sc[k]]);
  }
  return acc;
}

void DirectEngine::project(double radius) {
  if (radius <= 0.0) throw config_error("projection radius must be positive");
  const double n = rkhs_norm();
  if (n <= radius) return;
  const double f = radius / n;
  for (double& a : alpha_) a *= f;
  sq_norm_ = radius * radius;
}

double DirectEngine::evaluate(const PairPoint& p) const {
  double acc = 0.0;
  if (induced_) {
    const UnivariateKernel& g = kernel_.base();
    for (std::size_t k = 0; k < alpha_.size(); ++k) {
      const Point& xs = samples_[static_cast<std::size_t>(first_[k])].x;
      const Point& xl = samples_[static_cast<std::size_t>(second_[k])].x;
      acc += alpha_[k] * (g(xs, p.first) + g(xl, p.second) - g(xs, p.second) - g(xl, p.first));
    }
  } else {
    for (std::size_t k = 0; k < alpha_.size(); ++k) {
      const PairPoint c{samples_[static_cast<std::size_t>(first_[k])].x,
                        samples_[static_cast<std::size_t>(second_[k])].x};
      acc += alpha_[k] * kernel_(c, p);
    }
  }
  return acc;
}

double DirectEngine::evaluate_registered(int a, int b) const {
  double acc = 0.0;
  const std::size_t ne = eval_points_.size();
  const double* ep = ep_table_.data();
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    const std::size_t s = static_cast<std::size_t>(first_[k]) * ne;
    const std::size_t l = static_cast<std::size_t>(second_[k]) * ne;
    acc += alpha_[k] * pair_from(ep[s + a], ep[l + b], ep[s + b], ep[l + a]);
  }
  return acc;
}

PairwiseExpansion DirectEngine::snapshot() const {
  std::vector<PairPoint> centers;
  centers.reserve(alpha_.size());
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(alpha_.size()));
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    centers.emplace_back(samples_[static_cast<std::size_t>(first_[k])].x,
                         samples_[static_cast<std::size_t>(second_[k])].x);
    coeffs[static_cast<Eigen::Index>(k)] = alpha_[k];
  }
  return PairwiseExpansion::from_parts(kernel_, std::move(centers), std::move(coeffs), sq_norm());
}

void DirectEngine::accumulate_average() {
  if (!averaging_) return;
  if (avg_alpha_.size() < alpha_.size()) avg_alpha_.resize(alpha_.size(), 0.0);
  for (std::size_t k = 0; k < alpha_.size(); ++k) avg_alpha_[k] += alpha_[k];
  ++avg_count_;
}

PairwiseExpansion DirectEngine::averaged_snapshot(int iterates) const {
  std::vector<PairPoint> centers;
  centers.reserve(avg_alpha_.size());
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(avg_alpha_.size()));
  for (std::size_t k = 0; k < avg_alpha_.size(); ++k) {
    centers.emplace_back(samples_[static_cast<std::size_t>(first_[k])].x,
                         samples_[static_cast<std::size_t>(second_[k])].x);
    coeffs[static_cast<Eigen::Index>(k)] = avg_alpha_[k] / std::max(iterates, 1);
  }
  return PairwiseExpansion::from_parts(kernel_, std::move(centers), std::move(coeffs));
}

// ---------------------------------------------------------------------------
// ReducedEngine

ReducedEngine::ReducedEngine(const PairwiseKernel& k, int t_max, bool cache_gram)
    : g_(k.is_induced() ? k.base() : throw config_error("reduced mode requires an induced kernel")),
      cap_(t_max + 1), cached_(cache_gram) {
  if (t_max < 1) throw input_error("reduced engine: t_max must be >= 1");
  if (cached_) gram_.assign(static_cast<std::size_t>(cap_) * cap_, 0.0);
  samples_.reserve(static_cast<std::size_t>(cap_));
  scratch_.assign(static_cast<std::size_t>(cap_), 0.0);
}

int ReducedEngine::register_eval_point(const Point& p) {
  if (!samples_.empty()) throw state_error("reduced engine: eval points must be registered before samples");
  eval_points_.push_back(p);
  return static_cast<int>(eval_points_.size()) - 1;
}

double ReducedEngine::gram_at(int i, int j) const {
  if (cached_) return gram_[static_cast<std::size_t>(i) * cap_ + j];
  return g_(samples_[static_cast<std::size_t>(i)].x, samples_[static_cast<std::size_t>(j)].x);
}

double ReducedEngine::ep_at(int i, int c) const {
  return ep_table_[static_cast<std::size_t>(i) * eval_points_.size() + c];
}

void ReducedEngine::add_sample(const Sample& z) {
  if (samples_seen() >= cap_) throw state_error("reduced engine: capacity exceeded");
  const int r = samples_seen();
  samples_.push_back(z);
  if (cached_) {
    for (int i = 0; i <= r; ++i) {
      const double v = g_(samples_[static_cast<std::size_t>(r)].x, samples_[static_cast<std::size_t>(i)].x);
      gram_[static_cast<std::size_t>(r) * cap_ + i] = v;
      gram_[static_cast<std::size_t>(i) * cap_ + r] = v;
    }
  }
  for (std::size_t c = 0; c < eval_points_.size(); ++c)
    ep_table_.push_back(g_(samples_[static_cast<std::size_t>(r)].x, eval_points_[c]));
}

void ReducedEngine::seed_history(const Sample& z1) {
  if (!samples_.empty()) throw state_error("reduced engine: history already seeded");
  add_sample(z1);
  coeff_.push_back(0.0);  // g_2 = 0: the x_1 slot exists but carries weight 0
  val_.push_back(0.0);
}

void ReducedEngine::step(const Sample& z, double gamma) {
  if (samples_.empty()) throw state_error("reduced engine: step needs seeded history (t >= 2)");
  const int t = samples_seen() + 1;
  const int r = t - 1;
  add_sample(z);

  const double inv_m = 1.0 / static_cast<double>(t - 1);
  double gxt = 0.0;
  for (int i = 0; i < r; ++i) gxt += coeff_[static_cast<std::size_t>(i)] * gram_at(i, r);

  std::vector<double> d(static_cast<std::size_t>(t - 1));
  double mean_d = 0.0;
  for (int j = 0; j < t - 1; ++j) {
    d[static_cast<std::size_t>(j)] = gxt - val_[static_cast<std::size_t>(j)] - z.y +
                                     samples_[static_cast<std::size_t>(j)].y;
    mean_d += d[static_cast<std::size_t>(j)];
  }
  mean_d *= inv_m;

  // s[i] = sum_j d_j G(x_j, x_i), the Gram-row product behind both the value
  // cache update and the norm increment
  for (int i = 0; i <= r; ++i) scratch_[static_cast<std::size_t>(i)] = 0.0;
  if (cached_) {
    for (int j = 0; j < t - 1; ++j) {
      const double dj = d[static_cast<std::size_t>(j)];
      const double* row = &gram_[static_cast<std::size_t>(j) * cap_];
      for (int i = 0; i <= r; ++i) scratch_[static_cast<std::size_t>(i)] += dj * row[i];
    }
  } else {
    for (int j = 0; j < t - 1; ++j) {
      const double dj = d[static_cast<std::size_t>(j)];
      for (int i = 0; i <= r; ++i) scratch_[static_cast<std::size_t>(i)] += dj * gram_at(j, i);
    }
  }

  // ||g + delta||^2 bookkeeping with values of g_t still in the cache
  double cross = 0.0;
  for (int j = 0; j < t - 1; ++j) cross += d[static_cast<std::size_t>(j)] * val_[static_cast<std::size_t>(j)];
  cross = -gamma * (mean_d * gxt - inv_m * cross);
  double sum_ds = 0.0;
  for (int j = 0; j < t - 1; ++j) sum_ds += d[static_cast<std::size_t>(j)] * scratch_[static_cast<std::size_t>(j)];
  const double delta_sq = gamma * gamma *
                          (mean_d * mean_d * gram_at(r, r) -
                           2.0 * mean_d * inv_m * scratch_[static_cast<std::size_t>(r)] +
                           inv_m * inv_m * sum_ds);
  sq_norm_ += 2.0 * cross + delta_sq;

  // coefficient update: -gamma*mean(d) lands on G_{x_t}, +gamma*d_j/(t-1) on G_{x_j}
  for (int j = 0; j < t - 1; ++j) coeff_[static_cast<std::size_t>(j)] += gamma * inv_m * d[static_cast<std::size_t>(j)];
  coeff_.push_back(-gamma * mean_d);

  val_.push_back(gxt);
  if (cached_) {
    const double* row_r = &gram_[static_cast<std::size_t>(r) * cap_];
    for (int i = 0; i <= r; ++i)
      val_[static_cast<std::size_t>(i)] += -gamma * mean_d * row_r[i] + gamma * inv_m * scratch_[static_cast<std::size_t>(i)];
  } else {
    for (int i = 0; i <= r; ++i)
      val_[static_cast<std::size_t>(i)] += -gamma * mean_d * gram_at(r, i) + gamma * inv_m * scratch_[static_cast<std::size_t>(i)];
  }
}

double ReducedEngine::evaluate(const Point& p) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < coeff_.size(); ++i) acc += coeff_[i] * g_(samples_[i].x, p);
  return acc;
}

double ReducedEngine::evaluate_pair(const PairPoint& p) const {
  return evaluate(p.first) - evaluate(p.second);
}

double ReducedEngine::evaluate_registered(int c) const {
  double acc = 0.0;
  const std::size_t ne = eval_points_.size();
  for (std::size_t i = 0; i < coeff_.size(); ++i) acc += coeff_[i] * ep_table_[i * ne + c];
  return acc;
}

UnivariateExpansion ReducedEngine::snapshot() const {
  std::vector<Point> centers;
  centers.reserve(coeff_.size());
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(coeff_.size()));
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    centers.push_back(samples_[i].x);
    coeffs[static_cast<Eigen::Index>(i)] = coeff_[i];
  }
  return UnivariateExpansion::from_parts(g_, std::move(centers), std::move(coeffs), sq_norm());
}

void ReducedEngine::accumulate_average() {
  if (!averaging_) return;
  if (avg_coeff_.size() < coeff_.size()) avg_coeff_.resize(coeff_.size(), 0.0);
  for (std::size_t i = 0; i < coeff_.size(); ++i) avg_coeff_[i] += coeff_[i];
  ++avg_count_;
}

UnivariateExpansion ReducedEngine::averaged_snapshot(int iterates) const {
  std::vector<Point> centers;
  centers.reserve(avg_coeff_.size());
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(avg_coeff_.size()));
  for (std::size_t i = 0; i < avg_coeff_.size(); ++i) {
    centers.push_back(samples_[i].x);
    coeffs[static_cast<Eigen::Index>(i)] = avg_coeff_[i] / std::max(iterates, 1);
  }
  return UnivariateExpansion::from_parts(g_, std::move(centers), std::move(coeffs));
}

// ---------------------------------------------------------------------------
// run

std::vector<int> resolve_record_at(const std::vector<int>& requested, int T, bool log2_default) {
  std::vector<int> out;
  if (log2_default) {
    for (int t = 2; t <= T; t *= 2) out.push_back(t);
    out.push_back(T + 1);
  } else if (requested.empty()) {
    out.push_back(T + 1);
  } else {
    out = requested;
  }
  for (int t : out)
    if (t < 1 || t > T + 1) throw input_error("record_at entries must lie in [1, T+1]");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<PairPoint> default_probe_pairs(const Measure& measure, int count, std::uint64_t seed) {
  RngStream rng(seed);
  Point lo, hi;
  if (const auto* d = dynamic_cast<const DiscreteMeasure*>(&measure)) {
    lo = d->support()[0];
    hi = d->support()[0];
    for (const auto& p : d->support()) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  } else if (const auto* s = dynamic_cast<const SamplerMeasure*>(&measure)) {
    lo = s->box().lo;
    hi = s->box().hi;
  } else {
    throw input_error("default_probe_pairs: unsupported measure");
  }
  std::vector<PairPoint> probes;
  probes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Point a(lo.size()), b(lo.size());
    for (Eigen::Index k = 0; k < lo.size(); ++k) a[k] = rng.uniform(lo[k], hi[k]);
    for (Eigen::Index k = 0; k < lo.size(); ++k) b[k] = rng.uniform(lo[k], hi[k]);
    probes.emplace_back(std::move(a), std::move(b));
  }
  return probes;
}

namespace {

struct EvalContext {
  const DiscreteMeasure* discrete = nullptr;
  std::vector<int> support_cols;           // eval-point columns of the support grid
  std::vector<std::pair<int, int>> probe_cols;
};

template <class EvalRegistered>
double discrete_error(const DiscreteMeasure& m, const std::vector<int>& cols, EvalRegistered&& f) {
  double acc = 0.0;
  const auto& fr = m.f_rho_values();
  const int n = m.size();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double diff = f(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]) -
                          (fr[a] - fr[b]);
      acc += m.probs()[a] * m.probs()[b] * diff * diff;
    }
  return std::sqrt(std::max(acc, 0.0));
}

}  // namespace

RunResult run(const PairwiseKernel& kernel, const Measure& measure, const RunSpec& spec,
              std::uint64_t seed) {
  if (spec.T < 2) throw input_error("run: T must be >= 2");
  const std::vector<int> record = resolve_record_at(spec.record_at, spec.T, false);

  const bool use_reduced = spec.mode == RunMode::opera_reduced;
  const bool is_pogd = spec.mode == RunMode::pogd;
  if (!is_pogd && !spec.schedule) throw config_error("run: opera modes need a schedule");
  if (is_pogd && spec.R <= 0.0) throw config_error("run: pogd needs R > 0");
  if (is_pogd && spec.eta_mode == EtaMode::schedule && !spec.schedule)
    throw config_error("run: pogd with schedule step sizes needs theta/mu");
  if (is_pogd && spec.eta_mode == EtaMode::constant && spec.eta <= 0.0)
    throw config_error("run: pogd needs eta > 0");

  std::optional<DirectEngine> direct;
  std::optional<ReducedEngine> reduced;
  if (use_reduced)
    reduced.emplace(kernel, spec.T, spec.gram_cache);
  else
    direct.emplace(kernel, spec.T, spec.gram_cache);

  auto register_point = [&](const Point& p) {
    return use_reduced ? reduced->register_eval_point(p) : direct->register_eval_point(p);
  };

  EvalContext ctx;
  ctx.discrete = dynamic_cast<const DiscreteMeasure*>(&measure);
  if (ctx.discrete)
    for (const auto& u : ctx.discrete->support()) ctx.support_cols.push_back(register_point(u));
  for (const auto& p : spec.probes)
    ctx.probe_cols.emplace_back(register_point(p.first), register_point(p.second));

  if (spec.average_iterates) {
    if (use_reduced)
      reduced->enable_averaging();
    else
      direct->enable_averaging();
  }

  const double M = measure.label_bound();
  const double eta_paper = is_pogd ? spec.R * spec.R / static_cast<double>(spec.T) : 0.0;
  auto step_size = [&](int t) {
    if (!is_pogd) return spec.schedule->gamma(t);
    switch (spec.eta_mode) {
      case EtaMode::schedule: return spec.schedule->gamma(t);
      case EtaMode::paper: return eta_paper;
      case EtaMode::constant: return spec.eta;
    }
    return spec.eta;
  };

  auto eval_registered = [&](int a, int b) {
    return use_reduced ? reduced->evaluate_registered(a, b) : direct->evaluate_registered(a, b);
  };

  RunResult result;
  result.mode = spec.mode;
  result.seed = seed;

  auto current_norm = [&]() { return use_reduced ? reduced->rkhs_norm() : direct->rkhs_norm(); };

  auto row_error = [&](int t) -> std::pair<double, double> {
    if (ctx.discrete) return {discrete_error(*ctx.discrete, ctx.support_cols, eval_registered),
                              std::numeric_limits<double>::quiet_NaN()};
    // sampler measure: Monte Carlo against the pairwise target
    RngStream eval_rng(seed ^ (0x517CC1B727220A95ULL + static_cast<std::uint64_t>(t) * 0x9E3779B9ULL));
    const PairwiseTarget target(measure);
    auto diff = [&](const Point& a, const Point& b) {
      const double fv = use_reduced ? reduced->evaluate_pair(PairPoint(a, b))
                                    : direct->evaluate(PairPoint(a, b));
      return fv - target(a, b);
    };
    const RhoNorm n = rho_norm_mc(diff, measure, spec.mc_pairs, eval_rng);
    return {n.value, n.stderr_value};
  };

  double gamma_prefix = 0.0;  // sum_{j=2}^{t} gamma_j after step t
  auto emit_row = [&](int t, double lemma1_bound) {
    TrajectoryRow row;
    row.t = t;
    row.gamma_t = step_size(std::max(t, 1));
    const auto [err, se] = row_error(t);
    row.error_rho = err;
    row.error_stderr = se;
    row.norm_k = current_norm();
    row.lemma1_bound = lemma1_bound;
    for (const auto& [ca, cb] : ctx.probe_cols) row.probe_values.push_back(eval_registered(ca, cb));
    if (spec.keep_snapshots) {
      if (use_reduced)
        row.g_snapshot = reduced->snapshot();
      else
        row.snapshot = direct->snapshot();
    }
    result.rows.push_back(std::move(row));
  };

  RngStream rng(seed);
  {
    const Sample z1 = measure.sample(rng);
    if (use_reduced)
      reduced->seed_history(z1);
    else
      direct->seed_history(z1);
  }
  for (int t : record)
    if (t <= 2) emit_row(t, 0.0);  // f_1 = f_2 = 0

  auto record_it = std::lower_bound(record.begin(), record.end(), 3);
  for (int t = 2; t <= spec.T; ++t) {
    if (use_reduced)
      reduced->accumulate_average();
    else
      direct->accumulate_average();

    const Sample z = measure.sample(rng);
    const double gamma = step_size(t);
    if (use_reduced) {
      reduced->step(z, gamma);
    } else {
      direct->step(z, gamma);
      if (is_pogd) direct->project(spec.R);
    }
    gamma_prefix += gamma;

    const double bound = 2.0 * M * std::sqrt(gamma_prefix);
    const double norm = current_norm();
    if (!is_pogd) {
      const double excess = (norm - bound) / std::max(bound, 1e-300);
      result.max_lemma1_excess = std::max(result.max_lemma1_excess, excess);
    } else {
      result.max_radius_excess = std::max(result.max_radius_excess, norm - spec.R);
    }

    if (record_it != record.end() && *record_it == t + 1) {
      emit_row(t + 1, bound);
      ++record_it;
    }
  }

  result.history = use_reduced ? reduced->history() : direct->history();
  result.final_norm = current_norm();
  result.final_error = row_error(spec.T + 1).first;

  if (spec.average_iterates) {
    const int iterates = spec.T - 1;  // f_2 .. f_T
    const PairwiseTarget target(measure);
    if (use_reduced) {
      const LiftedHypothesis avg = lift(reduced->averaged_snapshot(iterates));
      auto diff = [&](const Point& a, const Point& b) { return avg.evaluate(a, b) - target(a, b); };
      if (ctx.discrete) {
        result.averaged_error = rho_norm(diff, *ctx.discrete).value;
      } else {
        RngStream eval_rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
        result.averaged_error = rho_norm_mc(diff, measure, spec.mc_pairs, eval_rng).value;
      }
    } else {
      const PairwiseExpansion avg = direct->averaged_snapshot(iterates);
      auto diff = [&](const Point& a, const Point& b) {
        return avg.evaluate(PairPoint(a, b)) - target(a, b);
      };
      if (ctx.discrete) {
        result.averaged_error = rho_norm(diff, *ctx.discrete).value;
      } else {
        RngStream eval_rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
        result.averaged_error = rho_norm_mc(diff, measure, spec.mc_pairs, eval_rng).value;
      }
    }
  }

  return result;
}

}  // namespace opera
