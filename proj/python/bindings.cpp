#include "structrates/diagnostics.hpp"
#include "structrates/error.hpp"
#include "structrates/experiment.hpp"
#include "structrates/loss.hpp"
#include "structrates/synthetic.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace structrates;

namespace {

SampleSet make_samples(const RowMatrix& inputs, std::vector<std::size_t> labels) {
  return SampleSet(inputs, std::move(labels));
}

py::dict probe_to_dict(const FrontierProbe& p) {
  py::dict d;
  d["best"] = p.best;
  d["nearest"] = p.nearest;
  d["distance"] = p.distance;
  d["direction"] = p.direction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Plug-in structured prediction: decoding, surrogate estimators, margin diagnostics, rate experiments";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ProfileDegenerate>(m, "ProfileDegenerate", PyExc_RuntimeError);
  py::register_exception<ExponentialRegime>(m, "ExponentialRegime", PyExc_RuntimeError);

  py::class_<FiniteLoss>(m, "FiniteLoss")
      .def(py::init<std::vector<std::string>, std::vector<std::string>, Eigen::MatrixXd>(), py::arg("z_labels"),
           py::arg("y_labels"), py::arg("matrix"))
      .def_static("zero_one", &FiniteLoss::zero_one, py::arg("labels"))
      .def_static("binary", &FiniteLoss::binary)
      .def_static("three_class", &FiniteLoss::three_class)
      .def_static("load", [](const std::string& path) { return load_loss(path); }, py::arg("path"))
      .def_property_readonly("z_labels", &FiniteLoss::z_labels)
      .def_property_readonly("y_labels", &FiniteLoss::y_labels)
      .def_property_readonly("matrix", &FiniteLoss::matrix)
      .def("psi", &FiniteLoss::psi, py::arg("z"))
      .def("min_pair_distance", &FiniteLoss::min_pair_distance)
      .def("max_pair_distance", &FiniteLoss::max_pair_distance)
      .def("__repr__", [](const FiniteLoss& l) {
        return "<FiniteLoss |Z|=" + std::to_string(l.num_predictions()) + " |Y|=" +
               std::to_string(l.num_observations()) + ">";
      });

  m.def("risk_vector", [](const FiniteLoss& l, const Eigen::VectorXd& g) { return risk_vector(l, {g}).values; },
        py::arg("loss"), py::arg("g"));
  m.def("decode", [](const FiniteLoss& l, const Eigen::VectorXd& g) { return decode(l, {g}); }, py::arg("loss"),
        py::arg("g"));
  m.def("margin_gap", [](const FiniteLoss& l, const Eigen::VectorXd& g) { return margin_gap(l, {g}); },
        py::arg("loss"), py::arg("g"));
  m.def("frontier_distance", [](const FiniteLoss& l, const Eigen::VectorXd& g) { return frontier_distance(l, {g}); },
        py::arg("loss"), py::arg("g"));
  m.def("probe_frontier", [](const FiniteLoss& l, const Eigen::VectorXd& g) { return probe_to_dict(probe_frontier(l, {g})); },
        py::arg("loss"), py::arg("g"));

  m.def(
      "knn_weights",
      [](const std::vector<double>& query, const RowMatrix& inputs, std::vector<std::size_t> labels, std::size_t k) {
        return knn_weights(query, make_samples(inputs, std::move(labels)), k).alpha;
      },
      py::arg("query"), py::arg("inputs"), py::arg("labels"), py::arg("k"));
  m.def(
      "krr_weights",
      [](const RowMatrix& queries, const RowMatrix& inputs, std::vector<std::size_t> labels, double bandwidth,
         double lam, const std::string& kernel) {
        const SampleSet data = make_samples(inputs, std::move(labels));
        const KernelSpec spec(kernel_family_from_string(kernel), bandwidth);
        return krr_weights_batch(queries, krr_fit(data, spec, lam), data, spec);
      },
      py::arg("queries"), py::arg("inputs"), py::arg("labels"), py::arg("bandwidth"), py::arg("lam"),
      py::arg("kernel") = "gaussian",
      "Weights for each query row; column j belongs to query j.");
  m.def("knn_schedule", &knn_schedule, py::arg("n"), py::arg("k0") = 1.0, py::arg("beta") = 1.0);
  m.def("krr_schedule", &krr_schedule, py::arg("n"), py::arg("lambda0") = 1.0, py::arg("q") = 0.5,
        py::arg("sigma") = 1.0);

  m.def(
      "_predict",
      [](const FiniteLoss& loss, const RowMatrix& inputs, std::vector<std::size_t> labels, const RowMatrix& queries,
         const std::string& estimator) {
        const SampleSet data = make_samples(inputs, std::move(labels));
        return predict_labels(estimator_from_json(nlohmann::json::parse(estimator)), data, loss, queries);
      },
      py::arg("loss"), py::arg("inputs"), py::arg("labels"), py::arg("queries"), py::arg("estimator_json"));

  py::class_<SyntheticProblem>(m, "SyntheticProblem")
      .def_static("power_margin", &SyntheticProblem::power_margin, py::arg("alpha"))
      .def_static("staircase", &SyntheticProblem::staircase, py::arg("period") = 1.0 / 50.0)
      .def_static("separated_support", &SyntheticProblem::separated_support, py::arg("exponent"))
      .def_static("three_class_simplex", &SyntheticProblem::three_class_simplex)
      .def_property_readonly("kind", [](const SyntheticProblem& p) { return to_string(p.kind()); })
      .def_property_readonly("parameter", &SyntheticProblem::parameter)
      .def_property_readonly("loss", &SyntheticProblem::loss)
      .def_property_readonly("margin_exponent", &SyntheticProblem::margin_exponent)
      .def("conditional", [](const SyntheticProblem& p, double x) { return p.conditional(x).weights; }, py::arg("x"))
      .def("regression", &SyntheticProblem::regression, py::arg("x"))
      .def("bayes_predict", &SyntheticProblem::bayes_predict, py::arg("x"))
      .def("frontier_distance", &SyntheticProblem::frontier_distance, py::arg("x"))
      .def("regular_grid", &SyntheticProblem::regular_grid, py::arg("count"))
      .def(
          "sample",
          [](const SyntheticProblem& p, std::size_t n, std::uint64_t seed) {
            const SampleSet s = p.sample(n, seed);
            return py::make_tuple(s.inputs(), s.labels());
          },
          py::arg("n"), py::arg("seed"))
      .def("__repr__", [](const SyntheticProblem& p) { return "<SyntheticProblem " + p.to_json().dump() + ">"; });

  m.def(
      "excess_risk",
      [](const std::vector<std::size_t>& predictions, const SyntheticProblem& p, const std::vector<double>& grid) {
        return excess_risk(predictions, p, grid);
      },
      py::arg("predictions"), py::arg("problem"), py::arg("grid"));

  m.def("log_thresholds", &log_thresholds, py::arg("lo"), py::arg("hi"), py::arg("count"));
  m.def("default_thresholds", &default_thresholds, py::arg("max_margin"));
  m.def(
      "_margin_profile",
      [](const std::vector<double>& margins, const std::vector<double>& thresholds, double drop_fraction,
         std::optional<std::pair<double, double>> range) {
        const MarginProfile profile = margin_profile(margins, thresholds);
        std::optional<AlphaFit> fit;
        try {
          fit = fit_alpha(profile, FitWindow{drop_fraction, range});
        } catch (const ProfileDegenerate&) {
        }
        return profile_to_json(profile, fit, check_no_density(profile)).dump();
      },
      py::arg("margins"), py::arg("thresholds"), py::arg("drop_fraction"), py::arg("range"));

  m.def(
      "_rate_experiment",
      [](const std::string& config_json, std::size_t workers) {
        const RateExperimentConfig config = rate_config_from_json(nlohmann::json::parse(config_json));
        RateReport report;
        {
          py::gil_scoped_release release;
          report = rate_experiment(config, workers);
        }
        return py::make_tuple(report_to_json(report).dump(), report.trial_risks);
      },
      py::arg("config_json"), py::arg("workers") = 1);
}
