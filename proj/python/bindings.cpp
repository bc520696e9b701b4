#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cpsi/errors.hpp"
#include "cpsi/multi_cp.hpp"
#include "cpsi/simulation.hpp"

namespace py = pybind11;
using namespace cpsi;

namespace {

KroneckerCovariance make_cov(const Matrix& xi, const Matrix& sigma) { return {xi, sigma}; }

AggregationSpec spec_from(const std::string& name) { return AggregationSpec::parse(name); }

}  // namespace

PYBIND11_MODULE(_cpsi, m) {
  m.doc() = "Selective inference for change points in multi-dimensional Gaussian sequences";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_ValueError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<AggregationSpec>(m, "AggregationSpec")
      .def_static("parse", &AggregationSpec::parse)
      .def_static("linf", &AggregationSpec::linf)
      .def_static("l1", &AggregationSpec::l1)
      .def_static("top_k", &AggregationSpec::top_k, py::arg("k"))
      .def_static("double_cusum", &AggregationSpec::double_cusum, py::arg("phi") = 0.5)
      .def_static("custom", &AggregationSpec::custom, py::arg("weights"))
      .def_property_readonly("name", &AggregationSpec::name)
      .def_readonly("k", &AggregationSpec::k)
      .def_readonly("phi", &AggregationSpec::phi)
      .def("__repr__", [](const AggregationSpec& s) { return "AggregationSpec('" + s.name() + "')"; });

  py::class_<KroneckerCovariance>(m, "KroneckerCovariance")
      .def(py::init(&make_cov), py::arg("xi"), py::arg("sigma"))
      .def_static("identity", &KroneckerCovariance::identity, py::arg("dims"), py::arg("length"))
      .def_property_readonly("xi", [](const KroneckerCovariance& c) { return Matrix(c.xi()); })
      .def_property_readonly("sigma", [](const KroneckerCovariance& c) { return Matrix(c.sigma()); });

  m.def("ar1_covariance", &ar1_covariance, py::arg("rho"), py::arg("n"));
  m.def("cell_covariance", &cell_covariance, py::arg("dims"), py::arg("length"), py::arg("xi"),
        py::arg("sigma"));

  py::class_<DetectionResult>(m, "DetectionResult")
      .def_readonly("t_hat", &DetectionResult::t_hat)
      .def_readonly("k_hat", &DetectionResult::k_hat)
      .def_readonly("weight_row", &DetectionResult::weight_row)
      .def_readonly("theta", &DetectionResult::theta)
      .def_readonly("delta", &DetectionResult::delta)
      .def_readonly("eta", &DetectionResult::eta)
      .def_readonly("degenerate", &DetectionResult::degenerate)
      .def_property_readonly("selected_dimensions", &DetectionResult::selected_dimensions);

  py::class_<TruncationInterval>(m, "TruncationInterval")
      .def_readonly("lower", &TruncationInterval::lower)
      .def_readonly("upper", &TruncationInterval::upper)
      .def_readonly("scale", &TruncationInterval::scale)
      .def_readonly("theta", &TruncationInterval::theta)
      .def_readonly("snapped", &TruncationInterval::snapped);

  py::class_<SelectiveTest>(m, "SelectiveTest")
      .def_readonly("detection", &SelectiveTest::detection)
      .def_readonly("interval", &SelectiveTest::interval)
      .def_readonly("p_selective", &SelectiveTest::p_selective)
      .def_readonly("p_naive", &SelectiveTest::p_naive)
      .def_readonly("low_precision", &SelectiveTest::low_precision)
      .def_property_readonly("t_hat", &SelectiveTest::t_hat)
      .def_property_readonly("k_hat", &SelectiveTest::k_hat);

  m.def(
      "detect", [](const Matrix& y, const std::string& agg) { return detect_single(SequenceMatrix(y), spec_from(agg)); },
      py::arg("y"), py::arg("agg") = "dc");
  m.def(
      "selective_test",
      [](const Matrix& y, const std::string& agg, const KroneckerCovariance& cov) {
        return run_selective_test(SequenceMatrix(y), spec_from(agg), cov);
      },
      py::arg("y"), py::arg("agg"), py::arg("cov"));
  m.def(
      "selective_p_value",
      [](double lower, double upper, double theta, double scale) {
        TruncationInterval in;
        in.lower = lower;
        in.upper = upper;
        in.theta = theta;
        in.scale = scale;
        return selective_p_value(in).value;
      },
      py::arg("lower"), py::arg("upper"), py::arg("theta"), py::arg("scale") = 1.0);
  m.def("naive_p_value", &naive_p_value, py::arg("theta"), py::arg("scale") = 1.0);

  py::class_<PowerEstimate>(m, "PowerEstimate")
      .def_readonly("alpha", &PowerEstimate::alpha)
      .def_readonly("mu", &PowerEstimate::mu)
      .def_readonly("z_alpha", &PowerEstimate::z_alpha)
      .def_readonly("kappa", &PowerEstimate::kappa)
      .def_readonly("power_quadratic", &PowerEstimate::power_quadratic)
      .def_readonly("power_lower_bound", &PowerEstimate::power_lower_bound);
  m.def(
      "power_estimate",
      [](double lower, double upper, double scale, double alpha, double mu) {
        TruncationInterval in;
        in.lower = lower;
        in.upper = upper;
        in.scale = scale;
        return power_estimate(in, alpha, mu);
      },
      py::arg("lower"), py::arg("upper"), py::arg("scale"), py::arg("alpha"), py::arg("mu"));

  py::class_<LocalTest>(m, "LocalTest")
      .def_readonly("t", &LocalTest::t)
      .def_readonly("window_first", &LocalTest::window_first)
      .def_readonly("test", &LocalTest::test)
      .def_readonly("selected_dimensions", &LocalTest::selected_dimensions);
  m.def(
      "local_estimates",
      [](const Matrix& y, const std::string& agg, int h) {
        return local_estimates(SequenceMatrix(y), spec_from(agg), WindowConfig{h, false});
      },
      py::arg("y"), py::arg("agg"), py::arg("h"));
  m.def(
      "detect_multiple",
      [](const Matrix& y, const std::string& agg, const KroneckerCovariance& cov, int h, bool bonferroni) {
        return detect_multiple(SequenceMatrix(y), spec_from(agg), cov, WindowConfig{h, bonferroni}).estimates;
      },
      py::arg("y"), py::arg("agg"), py::arg("cov"), py::arg("h"), py::arg("bonferroni") = false);

  m.def(
      "null_p_values",
      [](int dims, int length, double xi, double sigma, const std::string& agg, int replicates,
         std::uint64_t seed, int threads) {
        const auto p = null_p_values({dims, length, xi, sigma, spec_from(agg), replicates, seed}, threads);
        return py::make_tuple(p.selective, p.naive);
      },
      py::arg("dims"), py::arg("length"), py::arg("xi"), py::arg("sigma"), py::arg("agg") = "dc",
      py::arg("replicates") = 1000, py::arg("seed") = 2018, py::arg("threads") = 0);

  py::class_<KsResult>(m, "KsResult")
      .def_readonly("statistic", &KsResult::statistic)
      .def_readonly("p_value", &KsResult::p_value)
      .def_readonly("n", &KsResult::n);
  m.def("ks_uniform", &ks_uniform, py::arg("values"));
  m.def("kolmogorov_sf", &kolmogorov_sf, py::arg("lam"));
}
