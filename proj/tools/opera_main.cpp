#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "opera/experiment.hpp"
#include "opera/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // verification violations, runtime failures
constexpr int kExitUsage = 2;    // bad config / bad invocation

opera::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  opera::Config cfg = opera::Config::from_file(path);
  for (const auto& item : overrides) {
    std::string body = item;
    if (body.rfind("--", 0) == 0) body = body.substr(2);
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw opera::config_error("override '" + item + "' is not of the form --key=value");
    cfg.set(body.substr(0, eq), body.substr(eq + 1));
  }
  if (const char* env_seed = std::getenv("OPERA_SEED")) cfg.set("seed", env_seed);
  return cfg;
}

void print_medians(const opera::ExperimentOutput& out) {
  std::printf("  %-8s %s\n", "t", "median error_rho");
  for (const auto& [t, e] : out.medians_by_t) std::printf("  %-8d %.6g\n", t, e);
}

int write_reports(const std::vector<opera::CheckReport>& reports, const std::string& out_path) {
  const fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(out_path);
  f << opera::reports_to_json(reports) << '\n';

  bool ok = true;
  for (const auto& r : reports) {
    std::printf("[%s] %-34s cases=%-6ld violations=%-4ld worst_margin=%.3g\n",
                r.passed() ? "pass" : "FAIL", r.check.c_str(), r.n_cases, r.n_violations,
                r.worst_margin);
    ok = ok && r.passed();
  }
  std::printf("report: %s\n", out_path.c_str());
  return ok ? kExitOk : kExitFailure;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, bool print_rates) {
  opera::Config cfg = load_config(config_path, overrides);
  const opera::ExperimentConfig ecfg = opera::parse_experiment_config(cfg);
  const opera::ExperimentOutput out = opera::run_experiment(ecfg);
  opera::write_csv(out, ecfg.output + ".csv");
  opera::write_summary(out, ecfg.output + ".summary.json");
  std::printf("config_digest: %s\n", ecfg.digest.c_str());
  std::printf("wrote %s.csv and %s.summary.json\n", ecfg.output.c_str(), ecfg.output.c_str());
  print_medians(out);
  if (print_rates) {
    if (!out.rate_fit)
      throw opera::config_error("rate fit needs at least 3 recorded t values above t_min with positive error");
    std::printf("rate fit: slope %.4f intercept %.4f (rms residual %.3g over %d points)\n",
                out.rate_fit->slope, out.rate_fit->intercept, out.rate_fit->residual,
                out.rate_fit->n_points);
  } else if (out.rate_fit) {
    std::printf("rate fit slope: %.4f\n", out.rate_fit->slope);
  }
  std::printf("bound violation fraction: %.4f\n", out.bound_violation_fraction);
  return kExitOk;
}

int cmd_compare(const std::string& config_path, std::vector<std::string> overrides) {
  overrides.push_back("average_iterates=1");
  opera::Config cfg = load_config(config_path, overrides);
  opera::ExperimentConfig ecfg = opera::parse_experiment_config(cfg);
  if (ecfg.modes.size() < 2)
    throw opera::config_error("compare needs at least two entries in 'mode' (e.g. opera-reduced,pogd)");
  const opera::ExperimentOutput out = opera::run_experiment(ecfg);
  opera::write_csv(out, ecfg.output + ".csv");
  opera::write_summary(out, ecfg.output + ".summary.json");
  std::printf("config_digest: %s\n", ecfg.digest.c_str());
  std::printf("  %-16s %-18s %s\n", "mode", "final median err", "averaged-iterate median err");
  for (const auto& [mode, v] : out.final_median_by_mode) {
    const auto avg = out.averaged_median_by_mode.find(mode);
    std::printf("  %-16s %-18.6g %.6g\n", mode.c_str(), v,
                avg == out.averaged_median_by_mode.end() ? std::nan("") : avg->second);
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite, CLI::App* cmd) {
  const auto opt_d = [&](const char* name, double fallback) {
    return cmd->count(name) ? cmd->get_option(name)->as<double>() : fallback;
  };
  const auto opt_i = [&](const char* name, int fallback) {
    return cmd->count(name) ? cmd->get_option(name)->as<int>() : fallback;
  };
  const std::uint64_t seed = static_cast<std::uint64_t>(opt_i("--seed", 20240811));
  std::string out_path = cmd->count("--out") ? cmd->get_option("--out")->as<std::string>()
                                             : "opera_out/verify_" + suite + ".json";

  if (suite == "lemmas") {
    std::vector<double> thetas{0.55, 0.6, 2.0 / 3.0, 0.75, 0.9};
    std::vector<double> mus{1.0, 2.0};
    if (cmd->count("--theta")) thetas = {opt_d("--theta", 0.75)};
    if (cmd->count("--mu")) mus = {opt_d("--mu", 1.0)};
    return write_reports(opera::verify_lemmas(thetas, mus, opt_i("--tmax", 5000)), out_path);
  }
  if (suite == "operators") {
    std::vector<double> betas{0.5, 1.0};
    if (cmd->count("--beta")) betas = {opt_d("--beta", 0.5)};
    return write_reports(opera::verify_operators(betas, opt_d("--theta", 2.0 / 3.0), opt_d("--mu", 1.0),
                                                 opt_i("--dim", 20), opt_i("--trials", 100),
                                                 opt_i("--windows", 20), seed),
                         out_path);
  }
  if (suite == "concentration") {
    return write_reports(opera::verify_concentration(opt_i("--dim", 5), opt_i("--t", 100),
                                                     opt_d("--delta", 0.05), opt_i("--trials", 10000),
                                                     seed),
                         out_path);
  }
  if (suite == "decomposition") {
    return write_reports(opera::verify_decomposition(opt_i("--m", 5), opt_i("--T", 50),
                                                     opt_d("--theta", 2.0 / 3.0), opt_d("--sigma", 0.5),
                                                     opt_d("--noise", 0.1), seed),
                         out_path);
  }
  if (suite == "isometry") {
    return write_reports(opera::verify_isometry(opt_i("--count", 100), seed), out_path);
  }
  if (suite == "equivalence") {
    opera::EquivalenceOptions opt;
    opt.T = opt_i("--T", opt.T);
    opt.seeds = opt_i("--seeds", opt.seeds);
    opt.m = opt_i("--m", opt.m);
    opt.sigma = opt_d("--sigma", opt.sigma);
    opt.theta = opt_d("--theta", opt.theta);
    opt.seed = seed;
    const auto reports = opera::verify_equivalence(opt);
    double worst = 0.0;
    for (const auto& r : reports) worst = std::max(worst, opt.tolerance - r.worst_margin);
    std::printf("max deviation: %.3g (tolerance %.1g)\n", worst, opt.tolerance);
    return write_reports(reports, out_path);
  }
  throw opera::config_error("unknown verify suite '" + suite +
                            "' (lemmas, operators, concentration, decomposition, isometry, equivalence)");
}

int cmd_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw opera::config_error("'" + dir + "' is not a directory");
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty()) throw opera::config_error("no CSV result files in '" + dir + "'");

  json summary = json::object();
  for (const auto& path : csvs) {
    std::vector<opera::TrialRow> rows;
    try {
      rows = opera::read_csv(path.string());
    } catch (const opera::config_error& e) {
      // unreadable data is a runtime failure, not a usage error
      throw std::runtime_error(e.what());
    }
    std::map<int, std::vector<double>> by_t;
    std::map<std::pair<std::uint64_t, int>, std::map<std::string, double>> paired;
    long counted = 0, viol = 0;
    for (const auto& r : rows) {
      if (r.mode != opera::RunMode::pogd) {
        by_t[r.t].push_back(r.error_rho);
        if (r.t >= 4) {
          ++counted;
          if (r.error_rho > r.thm1_bound) ++viol;
        }
      }
      paired[{r.seed, r.t}][opera::run_mode_name(r.mode)] = r.error_rho;
    }
    json file_summary;
    json medians = json::object();
    std::vector<std::pair<double, double>> pts;
    for (auto& [t, v] : by_t) {
      const double m = opera::median(v);
      medians[std::to_string(t)] = m;
      pts.emplace_back(t, m);
    }
    file_summary["medians_by_t"] = std::move(medians);
    file_summary["bound_violation_fraction"] =
        counted ? static_cast<double>(viol) / counted : 0.0;
    try {
      const opera::RateFit fit = opera::fit_rate(pts, 32.0);
      file_summary["rate_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}};
    } catch (const opera::input_error&) {
      file_summary["rate_fit"] = nullptr;
    }
    summary[path.filename().string()] = std::move(file_summary);

    std::printf("%s\n", path.filename().string().c_str());
    bool has_pogd = false;
    for (const auto& [key, modes] : paired) has_pogd = has_pogd || modes.count("pogd");
    if (has_pogd) {
      std::printf("  %-12s %-6s %-14s %s\n", "seed", "t", "opera", "pogd");
      for (const auto& [key, modes] : paired) {
        double op = std::nan("");
        for (const auto& [mode, err] : modes)
          if (mode != "pogd") op = err;
        const auto pg = modes.find("pogd");
        std::printf("  %-12llu %-6d %-14.6g %.6g\n", static_cast<unsigned long long>(key.first),
                    key.second, op, pg == modes.end() ? std::nan("") : pg->second);
      }
    } else {
      for (auto& [t, v] : by_t) std::printf("  t=%-6d median=%.6g (n=%zu)\n", t, opera::median(v), v.size());
    }
  }

  const fs::path out_path = fs::path(dir) / "report_summary.json";
  std::ofstream f(out_path);
  f << summary.dump(2) << '\n';
  std::printf("wrote %s\n", out_path.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OPERA: online pairwise least-squares learning in an RKHS"};
  app.require_subcommand(1);

  std::string config_path, suite, dir;
  std::vector<std::string> overrides;

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->allow_extras();

  CLI::App* rates_cmd = app.add_subcommand("rates", "run an experiment and fit the error decay rate");
  rates_cmd->add_option("config", config_path, "config file")->required();
  rates_cmd->allow_extras();

  CLI::App* compare_cmd = app.add_subcommand("compare", "paired comparison of the configured modes");
  compare_cmd->add_option("config", config_path, "config file")->required();
  compare_cmd->allow_extras();

  CLI::App* verify_cmd = app.add_subcommand("verify", "run a numeric verification suite");
  verify_cmd->add_option("suite", suite,
                         "lemmas | operators | concentration | decomposition | isometry | equivalence")
      ->required();
  verify_cmd->add_option("--theta", "step size exponent");
  verify_cmd->add_option("--mu", "step size scale");
  verify_cmd->add_option("--tmax", "largest t for the sum checks");
  verify_cmd->add_option("--beta", "fractional power");
  verify_cmd->add_option("--dim", "vector/matrix dimension");
  verify_cmd->add_option("--trials", "number of random trials");
  verify_cmd->add_option("--windows", "windows per matrix");
  verify_cmd->add_option("--delta", "confidence level");
  verify_cmd->add_option("--t", "sample count per trial");
  verify_cmd->add_option("--T", "run length");
  verify_cmd->add_option("--seeds", "number of seeds");
  verify_cmd->add_option("--m", "support size");
  verify_cmd->add_option("--sigma", "gaussian kernel width");
  verify_cmd->add_option("--noise", "label noise half-width");
  verify_cmd->add_option("--count", "number of random cases");
  verify_cmd->add_option("--seed", "base RNG seed");
  verify_cmd->add_option("--out", "report path");

  CLI::App* report_cmd = app.add_subcommand("report", "consolidate result CSVs in a directory");
  report_cmd->add_option("dir", dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, run_cmd->remaining(), false);
    if (rates_cmd->parsed()) return cmd_run(config_path, rates_cmd->remaining(), true);
    if (compare_cmd->parsed()) return cmd_compare(config_path, compare_cmd->remaining());
    if (verify_cmd->parsed()) return cmd_verify(suite, verify_cmd);
    if (report_cmd->parsed()) return cmd_report(dir);
  } catch (const opera::config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const opera::input_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
