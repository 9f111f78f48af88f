#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "relaxmia/analysis.hpp"
#include "relaxmia/attacks.hpp"
#include "relaxmia/data.hpp"
#include "relaxmia/harness.hpp"
#include "relaxmia/nn.hpp"
#include "relaxmia/relaxloss.hpp"

namespace py = pybind11;
using namespace relaxmia;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

harness::ExperimentConfig make_config(const std::map<std::string, std::string>& settings) {
  harness::ExperimentConfig config;
  for (const auto& [key, value] : settings) harness::apply_setting(config, key, value);
  config.validate();
  return config;
}

py::dict attack_result(const attacks::AttackResult& r) {
  py::dict d;
  d["attack_name"] = r.attack_name;
  d["threshold"] = r.threshold;
  d["shadow_accuracy"] = r.shadow_accuracy;
  d["target_accuracy"] = r.target_accuracy;
  d["target_auc"] = r.target_auc;
  d["adaptive"] = r.adaptive;
  d["per_class_auc_top10"] = r.per_class_auc_top10;
  return d;
}

}  // namespace

PYBIND11_MODULE(_relaxmia, m) {
  m.doc() = "Membership-inference defence experiments";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<DimensionError> dimension_error(m, "DimensionError", error.ptr());
  static py::exception<UndefinedMetricError> undefined_error(m, "UndefinedMetricError", error.ptr());
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const DimensionError& e) {
      py::set_error(dimension_error, e.what());
    } catch (const UndefinedMetricError& e) {
      py::set_error(undefined_error, e.what());
    } catch (const ParseError& e) {
      py::set_error(parse_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<nn::MlpModel>(m, "MlpModel")
      .def_static("create",
                  [](std::vector<std::size_t> dims, const std::string& activation, double dropout,
                     std::uint64_t seed) {
                    return nn::MlpModel::create(std::move(dims), nn::parse_activation(activation), dropout, seed);
                  },
                  py::arg("layer_dims"), py::arg("activation") = "relu", py::arg("dropout") = 0.0,
                  py::arg("seed") = 0)
      .def_static("from_json", [](const std::string& text) { return nn::model_from_json(text); })
      .def_static("load", [](const std::filesystem::path& p) { return nn::load_model(p); })
      .def("to_json", [](const nn::MlpModel& self) { return nn::model_to_json(self); })
      .def_readonly("layer_dims", &nn::MlpModel::layer_dims)
      .def_property_readonly("parameter_count", &nn::MlpModel::parameter_count)
      .def("predict", [](const nn::MlpModel& self, const Array& x) {
        return to_array(nn::predict(self, to_matrix(x)).values());
      })
      .def("logits", [](const nn::MlpModel& self, const Array& x) {
        return to_array(nn::predict_logits(self, to_matrix(x)));
      })
      .def("grad_norms", [](const nn::MlpModel& self, const Array& x, const std::vector<int>& labels) {
        std::vector<py::dict> out;
        for (const auto& n : nn::per_sample_grad_norms(self, to_matrix(x), labels)) {
          py::dict d;
          d["x_l1"] = n.x_l1;
          d["x_l2"] = n.x_l2;
          d["w_l1"] = n.w_l1;
          d["w_l2"] = n.w_l2;
          out.push_back(d);
        }
        return out;
      });

  m.def("cross_entropy", [](const Array& posteriors, const Array& targets) {
    return nn::cross_entropy(nn::Posteriors::from_probabilities(to_matrix(posteriors)), to_matrix(targets));
  });

  m.def("construct_softlabels",
        [](const Array& posteriors, const std::vector<int>& labels, std::optional<double> gt_cap,
           const std::string& scope) {
          relax::RelaxConfig cfg;
          cfg.gt_cap = gt_cap;
          cfg.flatten_scope = relax::parse_flatten_scope(scope);
          return to_array(
              relax::construct_softlabels(nn::Posteriors::from_probabilities(to_matrix(posteriors)), labels, cfg));
        },
        py::arg("posteriors"), py::arg("labels"), py::arg("gt_cap") = py::none(),
        py::arg("scope") = "all_samples");
  m.def("decide_branch", [](double loss, double alpha, int epoch) {
    return std::string(relax::to_string(relax::decide_branch(loss, alpha, epoch).branch));
  });

  m.def("compute_auc", [](const std::vector<double>& members, const std::vector<double>& non_members) {
    return analysis::compute_auc(members, non_members);
  });
  m.def("select_threshold", [](const std::vector<double>& members, const std::vector<double>& non_members) {
    const auto rule = attacks::select_threshold(members, non_members);
    py::dict d;
    d["threshold"] = rule.threshold;
    d["shadow_accuracy"] = rule.shadow_accuracy;
    d["degenerate"] = rule.degenerate;
    return d;
  });
  m.def("loss_stats", [](const std::vector<double>& losses) {
    const auto s = analysis::loss_stats(losses);
    return py::make_tuple(s.mean, s.variance, s.count);
  });
  m.def("variance_decomposition", [](const std::vector<double>& l, const std::vector<double>& dl) {
    const auto d = analysis::variance_decomposition(l, dl);
    py::dict out;
    out["var_l"] = d.var_l;
    out["var_dl"] = d.var_dl;
    out["cov"] = d.cov;
    out["var_sum"] = d.var_sum;
    out["identity_residual"] = d.identity_residual;
    return out;
  });
  m.def("hellinger_gaussian", [](double mu1, double sigma1, double mu2, double sigma2) {
    return analysis::hellinger_gaussian({mu1, sigma1}, {mu2, sigma2});
  });
  m.def("tv_upper_bound", &analysis::tv_upper_bound);
  m.def("auc_upper_bound", &analysis::auc_upper_bound);
  m.def("bound_terms", [](double mu1, double mu2, double sigma1, double c) {
    const auto t = analysis::bound_terms(mu1, mu2, sigma1, c);
    return py::make_tuple(t.term_star, t.term_dstar);
  });
  m.def("pearson_correlation", [](const std::vector<double>& xs, const std::vector<double>& ys) {
    return analysis::pearson_correlation(xs, ys);
  });

  m.def("generate_synthetic",
        [](std::size_t classes, std::size_t dim, std::size_t per_class, double separation, double noise,
           const std::string& mode, std::uint64_t seed) {
          data::SyntheticSpec spec{classes, dim, per_class, separation, noise, data::parse_synthetic_mode(mode), seed};
          const auto d = data::generate_synthetic(spec);
          return py::make_tuple(to_array(d.features), d.labels);
        },
        py::arg("classes") = 20, py::arg("dim") = 50, py::arg("per_class") = 500, py::arg("separation") = 4.0,
        py::arg("noise") = 1.0, py::arg("mode") = "gaussian_blobs", py::arg("seed") = 0);
  m.def("five_fold_split", [](std::size_t n, std::uint64_t seed) {
    const auto plan = data::five_fold_split(n, seed);
    return std::vector<std::vector<std::size_t>>(plan.folds.begin(), plan.folds.end());
  });

  m.def("config_schema", &harness::config_schema);
  m.def("manifest", [](const std::map<std::string, std::string>& settings) {
    return harness::to_manifest(make_config(settings));
  }, py::arg("settings") = std::map<std::string, std::string>{});
  m.def("train",
        [](const std::map<std::string, std::string>& settings, const std::filesystem::path& out_dir) {
          py::gil_scoped_release release;
          const auto run = harness::cmd_train(make_config(settings), out_dir);
          return run.result.trace.to_csv();
        },
        py::arg("settings"), py::arg("out_dir"), "Trains a target model; returns the trace CSV.");
  m.def("attack",
        [](const std::filesystem::path& run_dir, const std::string& attack_list, bool adaptive) {
          std::vector<attacks::AttackResult> results;
          {
            py::gil_scoped_release release;
            results = harness::cmd_attack(run_dir, attacks::parse_attack_list(attack_list), adaptive);
          }
          std::vector<py::dict> out;
          for (const auto& r : results) out.push_back(attack_result(r));
          return out;
        },
        py::arg("run_dir"), py::arg("attacks") = "all", py::arg("adaptive") = false);
  m.def("sweep",
        [](const std::map<std::string, std::string>& settings, const std::string& method,
           const std::vector<double>& values, std::size_t jobs) {
          harness::SweepOptions o;
          o.method = method;
          o.values = values;
          o.jobs = jobs;
          const auto config = make_config(settings);
          py::gil_scoped_release release;
          return harness::cmd_sweep(config, o).to_csv();
        },
        py::arg("settings"), py::arg("method"), py::arg("values"), py::arg("jobs") = 1,
        "Runs a sweep; returns the sweep CSV.");
  m.def("analyze",
        [](const std::vector<std::filesystem::path>& dirs, bool correlation) {
          harness::AnalyzeOptions o;
          o.correlation = correlation;
          py::gil_scoped_release release;
          return harness::cmd_analyze(dirs, o);
        },
        py::arg("run_dirs"), py::arg("correlation") = true, "Returns the analysis report JSON text.");
  m.def("boundary", [](const std::filesystem::path& run_dir, const std::string& grid) {
    return harness::cmd_boundary(run_dir, harness::parse_grid(grid));
  }, py::arg("run_dir"), py::arg("grid") = "-3,3,-3,3,10,10");
}
