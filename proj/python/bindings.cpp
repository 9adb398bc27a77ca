#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opera/experiment.hpp"
#include "opera/presets.hpp"
#include "opera/verify.hpp"

namespace py = pybind11;
using namespace opera;

namespace {

PairPoint make_pair(const Point& a, const Point& b) { return PairPoint(a, b); }

RunSpec make_run_spec(const std::string& mode, int T, double theta, double mu, double R,
                      const std::string& eta, std::vector<int> record_at, bool record_log2,
                      std::vector<std::pair<Point, Point>> probes, bool keep_snapshots,
                      bool average_iterates, int mc_pairs) {
  RunSpec spec;
  spec.mode = parse_run_mode(mode);
  spec.T = T;
  spec.schedule = Schedule(theta, mu);
  spec.R = R;
  if (eta == "match" || eta.empty())
    spec.eta_mode = EtaMode::schedule;
  else if (eta == "paper")
    spec.eta_mode = EtaMode::paper;
  else {
    spec.eta_mode = EtaMode::constant;
    spec.eta = Config::parse_number(eta);
  }
  spec.record_at = resolve_record_at(record_at, T, record_log2);
  for (auto& [a, b] : probes) spec.probes.emplace_back(a, b);
  spec.keep_snapshots = keep_snapshots;
  spec.average_iterates = average_iterates;
  spec.mc_pairs = mc_pairs;
  return spec;
}

py::dict row_to_dict(const TrajectoryRow& row) {
  py::dict d;
  d["t"] = row.t;
  d["gamma_t"] = row.gamma_t;
  d["error_rho"] = row.error_rho;
  d["error_stderr"] = row.error_stderr;
  d["norm_K"] = row.norm_k;
  d["lemma1_bound"] = row.lemma1_bound;
  d["probe_values"] = row.probe_values;
  return d;
}

}  // namespace

PYBIND11_MODULE(_opera, m) {
  m.doc() = "Online pairwise least-squares learning in an RKHS, with numeric verification backends";

  py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
  py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<state_error>(m, "StateError", PyExc_RuntimeError);

  py::class_<UnivariateKernel>(m, "UnivariateKernel")
      .def_static("parse", &UnivariateKernel::parse, py::arg("spec"), py::arg("dim") = 1)
      .def("__call__", &UnivariateKernel::operator())
      .def_property_readonly("dim", &UnivariateKernel::dim)
      .def("spec_string", &UnivariateKernel::spec_string);

  py::class_<PairwiseKernel>(m, "PairwiseKernel")
      .def_static("parse", &PairwiseKernel::parse, py::arg("spec"), py::arg("dim") = 1)
      .def("__call__",
           [](const PairwiseKernel& k, const Point& x1, const Point& x2, const Point& y1,
              const Point& y2) { return k(make_pair(x1, x2), make_pair(y1, y2)); })
      .def_property_readonly("is_induced", &PairwiseKernel::is_induced)
      .def("spec_string", &PairwiseKernel::spec_string);

  m.def("kappa_points", [](const PairwiseKernel& k, const std::vector<Point>& pts) {
    const KappaBound b = kappa(k, pts);
    return py::make_tuple(b.value, b.analytic);
  });
  m.def("kappa_box", [](const PairwiseKernel& k, const Point& lo, const Point& hi) {
    const KappaBound b = kappa(k, Box(lo, hi));
    return py::make_tuple(b.value, b.analytic);
  });
  m.def("gram_univariate", [](const UnivariateKernel& k, const std::vector<Point>& pts) {
    return gram(k, pts);
  });
  m.def("gram_pairwise", [](const PairwiseKernel& k, const std::vector<std::pair<Point, Point>>& pts) {
    std::vector<PairPoint> pp;
    for (auto& [a, b] : pts) pp.emplace_back(a, b);
    return gram(k, pp);
  });

  py::class_<UnivariateExpansion>(m, "UnivariateExpansion")
      .def("evaluate", &UnivariateExpansion::evaluate)
      .def("rkhs_norm", &UnivariateExpansion::rkhs_norm)
      .def("size", &UnivariateExpansion::size)
      .def("coefficients", &UnivariateExpansion::coefficients)
      .def("to_json", [](const UnivariateExpansion& e) { return to_json_string(e); });

  py::class_<PairwiseExpansion>(m, "PairwiseExpansion")
      .def("evaluate",
           [](const PairwiseExpansion& e, const Point& a, const Point& b) {
             return e.evaluate(make_pair(a, b));
           })
      .def("rkhs_norm", &PairwiseExpansion::rkhs_norm)
      .def("size", &PairwiseExpansion::size)
      .def("projected", &PairwiseExpansion::projected)
      .def("to_json", [](const PairwiseExpansion& e) { return to_json_string(e); });

  m.def("univariate_expansion_from_json", &univariate_expansion_from_json, py::arg("text"),
        py::arg("dim") = 1);
  m.def("pairwise_expansion_from_json", &pairwise_expansion_from_json, py::arg("text"),
        py::arg("dim") = 1);

  m.def("isometry_check",
        [](const UnivariateKernel& g, const std::vector<std::pair<Point, Point>>& pairs,
           const Eigen::VectorXd& coeffs) {
          DifferenceExpansion d;
          for (auto& [a, b] : pairs) d.pairs.emplace_back(a, b);
          d.coeffs = coeffs;
          const IsometryResult r = isometry_check(g, d);
          return py::make_tuple(r.norm_g, r.norm_k);
        });

  py::class_<Measure, std::shared_ptr<Measure>>(m, "Measure");
  py::class_<DiscreteMeasure, Measure, std::shared_ptr<DiscreteMeasure>>(m, "DiscreteMeasure")
      .def(py::init<std::vector<Point>, Eigen::VectorXd, Eigen::VectorXd, double>(),
           py::arg("support"), py::arg("probs"), py::arg("f_rho_values"), py::arg("noise_half_width"))
      .def_static("uniform", &DiscreteMeasure::uniform, py::arg("support"), py::arg("f_rho_values"),
                  py::arg("noise_half_width"))
      .def_property_readonly("size", &DiscreteMeasure::size)
      .def_property_readonly("label_bound", &DiscreteMeasure::label_bound)
      .def("f_rho_values", &DiscreteMeasure::f_rho_values)
      .def("samples",
           [](const DiscreteMeasure& meas, std::uint64_t seed, int n) {
             RngStream rng(seed);
             py::list out;
             for (int i = 0; i < n; ++i) {
               const Sample s = meas.sample(rng);
               out.append(py::make_tuple(s.x, s.y, s.support_index));
             }
             return out;
           })
      .def("rho_norm_of_target", [](const DiscreteMeasure& meas) {
        const PairwiseTarget t(meas);
        return rho_norm(t, meas).value;
      });

  py::class_<SamplerMeasure, Measure, std::shared_ptr<SamplerMeasure>>(m, "SamplerMeasure")
      .def(py::init([](const Point& lo, const Point& hi, const std::string& expr, double noise) {
             return SamplerMeasure(Box(lo, hi), expr, noise);
           }),
           py::arg("lo"), py::arg("hi"), py::arg("expr"), py::arg("noise_half_width"))
      .def_property_readonly("label_bound", &SamplerMeasure::label_bound);

  m.def("preset_discrete_measure", &preset_discrete_measure, py::arg("m"), py::arg("noise_half_width"));
  m.def("preset_spectral_measure", &preset_spectral_measure, py::arg("kernel"), py::arg("m"),
        py::arg("beta"), py::arg("norm_target"), py::arg("noise_half_width"), py::arg("seed"));

  m.def(
      "run",
      [](const PairwiseKernel& kernel, const Measure& measure, const std::string& mode, int T,
         double theta, double mu, double R, const std::string& eta, std::vector<int> record_at,
         bool record_log2, std::vector<std::pair<Point, Point>> probes, bool average_iterates,
         int mc_pairs, std::uint64_t seed) {
        if (mu <= 0.0) {
          if (const auto* d = dynamic_cast<const DiscreteMeasure*>(&measure)) {
            const double k = kappa(kernel, d->support()).value;
            mu = k * k;
          } else {
            throw config_error("mu=auto needs a discrete measure in the python binding");
          }
        }
        const RunSpec spec = make_run_spec(mode, T, theta, mu, R, eta, std::move(record_at),
                                           record_log2, std::move(probes), false, average_iterates,
                                           mc_pairs);
        const RunResult res = run(kernel, measure, spec, seed);
        py::dict out;
        out["mode"] = run_mode_name(res.mode);
        out["seed"] = res.seed;
        out["final_error"] = res.final_error;
        out["final_norm"] = res.final_norm;
        out["max_lemma1_excess"] = res.max_lemma1_excess;
        out["max_radius_excess"] = res.max_radius_excess;
        out["averaged_error"] = res.averaged_error;
        py::list rows;
        for (const auto& row : res.rows) rows.append(row_to_dict(row));
        out["rows"] = std::move(rows);
        return out;
      },
      py::arg("kernel"), py::arg("measure"), py::arg("mode"), py::arg("T"),
      py::arg("theta") = 2.0 / 3.0, py::arg("mu") = -1.0, py::arg("R") = 1.0,
      py::arg("eta") = "match", py::arg("record_at") = std::vector<int>{},
      py::arg("record_log2") = true, py::arg("probes") = std::vector<std::pair<Point, Point>>{},
      py::arg("average_iterates") = false, py::arg("mc_pairs") = 100000, py::arg("seed") = 1);

  py::class_<SpectralModel>(m, "SpectralModel")
      .def(py::init<const PairwiseKernel&, const DiscreteMeasure&>())
      .def_property_readonly("rank", &SpectralModel::rank)
      .def("eigenvalues", &SpectralModel::eigenvalues)
      .def("apply", &SpectralModel::apply)
      .def("apply_direct", &SpectralModel::apply_direct)
      .def("fractional_apply", &SpectralModel::fractional_apply)
      .def("eigen_coords", &SpectralModel::eigen_coords)
      .def("rho_norm", &SpectralModel::rho_norm)
      .def("target_grid", &SpectralModel::target_grid)
      .def("weighted_diagonal", &SpectralModel::weighted_diagonal);

  m.def("k_functional", &k_functional, py::arg("model"), py::arg("f"), py::arg("s"));
  m.def("construct_regular_target",
        [](const SpectralModel& model, double beta, double norm_target, std::uint64_t seed) {
          RngStream rng(seed);
          const RegularTarget t = construct_regular_target(model, beta, norm_target, rng);
          return py::make_tuple(t.grid_values, t.source_norm, t.f_rho_values);
        });
  m.def("constants", [](double theta, double mu, double kappa_v, double M, double beta) {
    const BoundConstants c = constants(theta, mu, kappa_v, M, beta);
    py::dict d;
    d["C_theta"] = c.c_theta;
    d["C_theta_tilde"] = c.c_theta_tilde;
    d["C_theta_kappa"] = c.c_theta_kappa;
    d["D_kappa_beta"] = c.d_kappa_beta;
    return d;
  });
  m.def("theorem1_bound", &theorem1_bound, py::arg("theta"), py::arg("mu"), py::arg("kappa"),
        py::arg("M"), py::arg("T"), py::arg("delta"), py::arg("kfunc_value"));
  m.def("theorem1_s", &theorem1_s);

  auto report_result = [](const std::vector<CheckReport>& reports) {
    bool ok = true;
    for (const auto& r : reports) ok = ok && r.passed();
    return py::make_tuple(ok, reports_to_json(reports));
  };
  m.def("verify_lemmas", [report_result](std::vector<double> thetas, std::vector<double> mus,
                                         int t_max) { return report_result(verify_lemmas(thetas, mus, t_max)); },
        py::arg("thetas") = std::vector<double>{0.55, 0.6, 2.0 / 3.0, 0.75, 0.9},
        py::arg("mus") = std::vector<double>{1.0, 2.0}, py::arg("t_max") = 5000);
  m.def("verify_equivalence", [report_result](int T, int seeds, int m_pts, double sigma) {
          EquivalenceOptions opt;
          opt.T = T;
          opt.seeds = seeds;
          opt.m = m_pts;
          opt.sigma = sigma;
          return report_result(verify_equivalence(opt));
        },
        py::arg("T") = 120, py::arg("seeds") = 2, py::arg("m") = 5, py::arg("sigma") = 0.5);
  m.def("verify_isometry",
        [report_result](int count, std::uint64_t seed) { return report_result(verify_isometry(count, seed)); },
        py::arg("count") = 100, py::arg("seed") = 20240811);

  m.def("run_experiment_text", [](const std::string& config_text) {
    Config cfg = Config::from_string(config_text);
    const ExperimentConfig ecfg = parse_experiment_config(cfg);
    const ExperimentOutput out = run_experiment(ecfg);
    return summary_json(out);
  });
}
