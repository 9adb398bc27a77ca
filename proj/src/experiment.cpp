#include "opera/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

namespace opera {

using json = nlohmann::json;

int ExperimentConfig::max_T() const {
  int m = 2;
  for (int t : T_list) m = std::max(m, t);
  return m;
}

namespace {

std::vector<Point> parse_points(const std::string& text) {
  std::vector<Point> pts;
  for (const auto& chunk : Config::split(text, ';')) {
    const auto coords = Config::split(chunk, ',');
    Point p(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i)
      p[static_cast<Eigen::Index>(i)] = Config::parse_number(coords[i]);
    pts.push_back(std::move(p));
  }
  // a single 1-d chunk like "-1,0,1" denotes a list of scalar points
  if (pts.size() == 1 && pts[0].size() > 1 && text.find(';') == std::string::npos) {
    std::vector<Point> flat;
    for (Eigen::Index i = 0; i < pts[0].size(); ++i) flat.push_back(point1d(pts[0][i]));
    return flat;
  }
  return pts;
}

Box parse_box(const std::string& text) {
  const auto axes = Config::split(text, ';');
  Point lo(static_cast<Eigen::Index>(axes.size())), hi(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto pair = Config::split(axes[i], ',');
    if (pair.size() != 2) throw config_error("box axis must be 'lo,hi'");
    lo[static_cast<Eigen::Index>(i)] = Config::parse_number(pair[0]);
    hi[static_cast<Eigen::Index>(i)] = Config::parse_number(pair[1]);
  }
  return Box(std::move(lo), std::move(hi));
}

}  // namespace

ExperimentConfig parse_experiment_config(Config& cfg) {
  ExperimentConfig out;
  out.kernel_spec = cfg.get_string("kernel", out.kernel_spec);

  if (cfg.has("box")) {
    if (cfg.has("support")) throw config_error("provide either 'support' or 'box', not both");
    out.discrete = false;
    out.box = parse_box(cfg.get_string("box"));
    const std::string fr = cfg.get_string("f_rho", "expr:sin-sum");
    if (fr.rfind("expr:", 0) != 0) throw config_error("continuous measures need f_rho = expr:<name>");
    out.f_rho_kind = ExperimentConfig::FRho::expr;
    out.expr = fr.substr(5);
  } else {
    if (!cfg.has("support")) throw config_error("config needs either 'support' or 'box'");
    out.support = parse_points(cfg.get_string("support"));
    if (cfg.has("probs")) {
      const std::string p = cfg.get_string("probs");
      if (p != "uniform") {
        const auto vals = cfg.get_doubles("probs");
        out.probs.resize(static_cast<Eigen::Index>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i) out.probs[static_cast<Eigen::Index>(i)] = vals[i];
      }
    }
    const std::string fr = cfg.get_string("f_rho", "spectral:beta=1:seed=1");
    if (fr.rfind("spectral:", 0) == 0) {
      out.f_rho_kind = ExperimentConfig::FRho::spectral;
      for (const auto& part : Config::split(fr.substr(9), ':')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw config_error("spectral target spec: key=value parts expected");
        const std::string key = part.substr(0, eq), val = part.substr(eq + 1);
        if (key == "beta")
          out.spectral_beta = Config::parse_number(val);
        else if (key == "seed")
          out.spectral_seed = static_cast<std::uint64_t>(Config::parse_number(val));
        else if (key == "norm")
          out.spectral_norm = Config::parse_number(val);
        else
          throw config_error("spectral target spec: unknown field '" + key + "'");
      }
    } else {
      out.f_rho_kind = ExperimentConfig::FRho::explicit_values;
      const auto vals = Config::split(fr, ',');
      out.f_rho_values.resize(static_cast<Eigen::Index>(vals.size()));
      for (std::size_t i = 0; i < vals.size(); ++i)
        out.f_rho_values[static_cast<Eigen::Index>(i)] = Config::parse_number(vals[i]);
      if (out.f_rho_values.size() != static_cast<Eigen::Index>(out.support.size()))
        throw config_error("f_rho values must match the support size");
    }
  }
  out.noise_half_width = cfg.get_double("noise_half_width", out.noise_half_width);

  if (cfg.has("mode")) {
    out.modes.clear();
    for (const auto& m : cfg.get_strings("mode")) out.modes.push_back(parse_run_mode(m));
    if (out.modes.empty()) throw config_error("mode list is empty");
  }
  if (cfg.has("T")) {
    out.T_list.clear();
    for (long t : cfg.get_ints("T")) {
      if (t < 2) throw config_error("T values must be >= 2");
      out.T_list.push_back(static_cast<int>(t));
    }
    if (out.T_list.empty()) throw config_error("T list is empty");
  }
  out.theta = cfg.get_double("theta", out.theta);
  if (!(out.theta > 0.0 && out.theta < 1.0)) throw config_error("theta must lie in (0,1)");
  if (cfg.has("mu")) {
    const std::string mu = cfg.get_string("mu");
    if (mu == "auto") {
      out.mu_auto = true;
    } else {
      out.mu_auto = false;
      out.mu = Config::parse_number(mu);
      if (!(out.mu > 0.0)) throw config_error("mu must be positive");
    }
  }
  out.R = cfg.get_double("R", out.R);
  if (cfg.has("eta")) {
    const std::string eta = cfg.get_string("eta");
    if (eta == "paper")
      out.eta_mode = EtaMode::paper;
    else if (eta == "match")
      out.eta_mode = EtaMode::schedule;
    else {
      out.eta_mode = EtaMode::constant;
      out.eta = Config::parse_number(eta);
    }
  } else {
    out.eta_mode = EtaMode::constant;
    out.eta = -1.0;  // resolved to R/((2M + kappa R) sqrt(T)) once M and kappa are known
  }
  out.n_trials = static_cast<int>(cfg.get_int("n_trials", 1));
  if (out.n_trials < 1) throw config_error("n_trials must be >= 1");
  out.base_seed = cfg.get_u64("seed", 1);
  out.delta = cfg.get_double("delta", 0.1);
  if (!(out.delta > 0.0 && out.delta < 1.0)) throw config_error("delta must lie in (0,1)");
  if (cfg.has("record_at")) {
    const std::string r = cfg.get_string("record_at");
    if (r == "log2") {
      out.record_log2 = true;
    } else {
      for (long t : cfg.get_ints("record_at")) out.record_at.push_back(static_cast<int>(t));
    }
  }
  out.average_iterates = cfg.get_int("average_iterates", 0) != 0;
  out.mc_pairs = static_cast<int>(cfg.get_int("mc_pairs", out.mc_pairs));
  const std::string gc = cfg.get_string("gram_cache", "auto");
  out.gram_cache = gc == "auto" ? -1 : (gc == "on" ? 1 : (gc == "off" ? 0 : throw config_error(
                                        "gram_cache must be auto, on or off")));
  out.workers = static_cast<int>(cfg.get_int("workers", 0));
  out.t_min_fit = static_cast<int>(cfg.get_int("t_min", 32));
  out.output = cfg.get_string("output", out.output);
  cfg.reject_unknown_keys();
  out.digest = cfg.digest();
  return out;
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  const int dim = cfg.discrete ? (cfg.support.empty() ? 1 : static_cast<int>(cfg.support[0].size()))
                               : cfg.box.dim();
  BuiltExperiment out(PairwiseKernel::parse(cfg.kernel_spec, dim));

  if (cfg.discrete) {
    Eigen::VectorXd probs = cfg.probs;
    const auto m = static_cast<Eigen::Index>(cfg.support.size());
    if (probs.size() == 0) probs = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));

    Eigen::VectorXd f_rho = cfg.f_rho_values;
    if (cfg.f_rho_kind == ExperimentConfig::FRho::spectral) {
      // bootstrap measure with zero targets to build the operator, then anchor
      DiscreteMeasure boot(cfg.support, probs, Eigen::VectorXd::Zero(m), cfg.noise_half_width);
      SpectralModel boot_model(out.kernel, boot);
      RngStream rng(cfg.spectral_seed);
      const RegularTarget target =
          construct_regular_target(boot_model, cfg.spectral_beta, cfg.spectral_norm, rng);
      f_rho = target.f_rho_values;
    }
    auto meas = std::make_unique<DiscreteMeasure>(cfg.support, probs, f_rho, cfg.noise_half_width);
    out.model = std::make_shared<SpectralModel>(out.kernel, *meas);
    out.target_rho_norm = out.model->rho_norm(out.model->target_grid());
    out.kappa = kappa(out.kernel, meas->support()).value;
    out.M = meas->label_bound();
    out.measure = std::move(meas);
  } else {
    auto meas = std::make_unique<SamplerMeasure>(cfg.box, cfg.expr, cfg.noise_half_width);
    out.kappa = kappa(out.kernel, cfg.box).value;
    out.M = meas->label_bound();
    {
      RngStream rng(cfg.base_seed ^ 0xF00DF00DF00DF00DULL);
      const PairwiseTarget t(*meas);
      out.target_rho_norm = rho_norm_mc(t, *meas, std::max(cfg.mc_pairs, 1000), rng).value;
    }
    out.measure = std::move(meas);
  }
  out.mu = cfg.mu_auto ? out.kappa * out.kappa : cfg.mu;
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw input_error("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct BoundTable {
  // theorem-1 bound per iterate index, shared across trials
  std::map<int, double> by_t;
};

BoundTable make_bound_table(const ExperimentConfig& cfg, const BuiltExperiment& built,
                            const std::vector<int>& record) {
  BoundTable table;
  for (int t : record) {
    // iterate f_t is the last iterate of a (t-1)-sample prefix run
    const int T_eff = std::max(t - 1, 2);
    const double s = theorem1_s(cfg.theta, built.mu, built.kappa, T_eff);
    double kf = 0.0;
    if (built.model) {
      kf = k_functional(*built.model, built.model->target_grid(), s);
    } else {
      // continuous measure: use the f = 0 feasible point, K(s, .) <= ||f_tilde||_rho
      kf = built.target_rho_norm;
    }
    table.by_t[t] = theorem1_bound(cfg.theta, built.mu, built.kappa, built.M, T_eff, cfg.delta, kf);
  }
  return table;
}

std::vector<int> experiment_record_set(const ExperimentConfig& cfg) {
  const int t_max = cfg.max_T();
  std::vector<int> record = resolve_record_at(cfg.record_at, t_max, cfg.record_log2);
  for (int t : cfg.T_list) record.push_back(t + 1);  // milestone rows: last iterate of each T
  std::sort(record.begin(), record.end());
  record.erase(std::unique(record.begin(), record.end()), record.end());
  return record;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  const BuiltExperiment built = build_experiment(cfg);
  const int t_max = cfg.max_T();
  const std::vector<int> record = experiment_record_set(cfg);
  const BoundTable bounds = make_bound_table(cfg, built, record);

  double eta_const = cfg.eta;
  if (cfg.eta_mode == EtaMode::constant && eta_const <= 0.0)
    eta_const = cfg.R / ((2.0 * built.M + built.kappa * cfg.R) * std::sqrt(static_cast<double>(t_max)));

  struct Task {
    RunMode mode;
    int trial;
  };
  std::vector<Task> tasks;
  for (RunMode mode : cfg.modes)
    for (int trial = 0; trial < cfg.n_trials; ++trial) tasks.push_back({mode, trial});

  std::vector<TrialResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      RunSpec spec;
      spec.mode = task.mode;
      spec.T = t_max;
      spec.schedule = Schedule(cfg.theta, built.mu);
      spec.R = cfg.R;
      spec.eta_mode = cfg.eta_mode;
      spec.eta = eta_const;
      spec.record_at = record;
      spec.average_iterates = cfg.average_iterates;
      spec.gram_cache = cfg.gram_cache == -1 ? t_max <= 3000 : cfg.gram_cache == 1;
      spec.mc_pairs = cfg.mc_pairs;
      const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(task.trial);
      const RunResult run_result = run(built.kernel, *built.measure, spec, seed);

      TrialResult tr;
      tr.trial = task.trial;
      tr.seed = seed;
      tr.mode = task.mode;
      tr.max_lemma1_excess = run_result.max_lemma1_excess;
      tr.max_radius_excess = run_result.max_radius_excess;
      tr.averaged_error = run_result.averaged_error;
      tr.final_error = run_result.final_error;
      for (const auto& row : run_result.rows) {
        TrialRow out_row;
        out_row.trial = task.trial;
        out_row.seed = seed;
        out_row.t = row.t;
        out_row.gamma_t = row.gamma_t;
        out_row.error_rho = row.error_rho;
        out_row.error_stderr = row.error_stderr;
        out_row.norm_k = row.norm_k;
        out_row.lemma1_bound = row.lemma1_bound;
        out_row.thm1_bound = bounds.by_t.at(row.t);
        out_row.mode = task.mode;
        tr.rows.push_back(out_row);
      }
      results[i] = std::move(tr);
    }
  };

  int n_workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ExperimentOutput out;
  out.config = cfg;
  out.trials = std::move(results);
  std::stable_sort(out.trials.begin(), out.trials.end(), [](const TrialResult& a, const TrialResult& b) {
    if (a.mode != b.mode) return static_cast<int>(a.mode) < static_cast<int>(b.mode);
    return a.trial < b.trial;
  });

  // medians per recorded t over the first configured mode
  const RunMode primary = cfg.modes.front();
  std::map<int, std::vector<double>> errs;
  long viol = 0, counted = 0;
  std::map<std::string, std::vector<double>> finals, avgs;
  for (const auto& tr : out.trials) {
    finals[run_mode_name(tr.mode)].push_back(tr.final_error);
    if (std::isfinite(tr.averaged_error)) avgs[run_mode_name(tr.mode)].push_back(tr.averaged_error);
    for (const auto& row : tr.rows) {
      if (tr.mode == primary) errs[row.t].push_back(row.error_rho);
      if (tr.mode != RunMode::pogd && row.t >= 4) {
        ++counted;
        if (row.error_rho > row.thm1_bound) ++viol;
      }
    }
  }
  for (auto& [t, v] : errs) out.medians_by_t[t] = median(v);
  out.bound_violation_fraction = counted ? static_cast<double>(viol) / counted : 0.0;
  for (auto& [mode, v] : finals) out.final_median_by_mode[mode] = median(v);
  for (auto& [mode, v] : avgs) out.averaged_median_by_mode[mode] = median(v);
  if (out.medians_by_t.size() >= 3) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, e] : out.medians_by_t) pts.emplace_back(static_cast<double>(t), e);
    try {
      out.rate_fit = fit_rate(pts, cfg.t_min_fit);
    } catch (const input_error&) {
      // not enough positive medians above t_min; leave the fit empty
    }
  }
  return out;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& t_vs_error, double t_min) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, e] : t_vs_error)
    if (t >= t_min && e > 0.0) pts.emplace_back(std::log(t), std::log(e));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return a.first == b.first; }),
            pts.end());
  if (pts.size() < 3)
    throw input_error("fit_rate: need at least 3 distinct t values above t_min with positive error");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  RateFit fit;
  fit.n_points = static_cast<int>(pts.size());
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0;
  for (const auto& [x, y] : pts) {
    const double r = y - (fit.slope * x + fit.intercept);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

RateFit fit_rate(const ExperimentOutput& out, double t_min) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, e] : out.medians_by_t) pts.emplace_back(static_cast<double>(t), e);
  return fit_rate(pts, t_min);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(const ExperimentOutput& out, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path);
  if (!f) throw config_error("cannot open output file '" + path + "'");
  f << "trial,seed,t,gamma_t,error_rho,error_rho_stderr,norm_K,lemma1_bound,thm1_bound,mode\n";
  for (const auto& tr : out.trials)
    for (const auto& row : tr.rows) {
      f << row.trial << ',' << row.seed << ',' << row.t << ',' << num(row.gamma_t) << ','
        << num(row.error_rho) << ',' << (std::isnan(row.error_stderr) ? "" : num(row.error_stderr))
        << ',' << num(row.norm_k) << ',' << num(row.lemma1_bound) << ',' << num(row.thm1_bound)
        << ',' << run_mode_name(row.mode) << '\n';
    }
}

std::string summary_json(const ExperimentOutput& out) {
  json j;
  j["config_digest"] = out.config.digest;
  json med = json::object();
  for (const auto& [t, e] : out.medians_by_t) med[std::to_string(t)] = e;
  j["medians_by_t"] = std::move(med);
  if (out.rate_fit) {
    j["rate_fit"] = {{"slope", out.rate_fit->slope},
                     {"intercept", out.rate_fit->intercept},
                     {"residual", out.rate_fit->residual},
                     {"n_points", out.rate_fit->n_points}};
  } else {
    j["rate_fit"] = nullptr;
  }
  j["bound_violation_fraction"] = out.bound_violation_fraction;
  json finals = json::object();
  for (const auto& [mode, v] : out.final_median_by_mode) finals[mode] = v;
  j["final_median_by_mode"] = std::move(finals);
  if (!out.averaged_median_by_mode.empty()) {
    json avg = json::object();
    for (const auto& [mode, v] : out.averaged_median_by_mode) avg[mode] = v;
    j["averaged_iterate_median_by_mode"] = std::move(avg);
  }
  return j.dump(2);
}

void write_summary(const ExperimentOutput& out, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path);
  if (!f) throw config_error("cannot open output file '" + path + "'");
  f << summary_json(out) << '\n';
}

std::vector<TrialRow> read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open CSV '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw config_error("empty CSV '" + path + "'");
  std::vector<TrialRow> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto parts = Config::split(line, ',');
    if (parts.size() != 10)
      throw config_error("corrupt CSV '" + path + "' line " + std::to_string(lineno));
    try {
      TrialRow r;
      r.trial = static_cast<int>(std::stol(parts[0]));
      r.seed = std::stoull(parts[1]);
      r.t = static_cast<int>(std::stol(parts[2]));
      r.gamma_t = std::stod(parts[3]);
      r.error_rho = std::stod(parts[4]);
      r.error_stderr = parts[5].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(parts[5]);
      r.norm_k = std::stod(parts[6]);
      r.lemma1_bound = std::stod(parts[7]);
      r.thm1_bound = std::stod(parts[8]);
      r.mode = parse_run_mode(parts[9]);
      rows.push_back(r);
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      throw config_error("corrupt CSV '" + path + "' line " + std::to_string(lineno));
    }
  }
  return rows;
}

}  // namespace opera
