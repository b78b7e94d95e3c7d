// Python bindings for the dartr library.

#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dartr/assembly.hpp"
#include "dartr/error.hpp"
#include "dartr/harness.hpp"
#include "dartr/io.hpp"
#include "dartr/lcurve.hpp"
#include "dartr/regsolve.hpp"

namespace py = pybind11;
using namespace dartr;

namespace {

py::dict cell_to_dict(const CellResult& c) {
  py::dict d;
  d["operator"] = std::string(to_string(c.op));
  d["kernel"] = c.kernel;
  d["nsr"] = c.nsr;
  d["dx"] = c.dx;
  d["seed"] = c.seed;
  d["regularizer"] = std::string(short_name(c.regularizer));
  d["n"] = c.n;
  d["lambda"] = c.lambda;
  d["loss"] = c.loss;
  d["l2rho_error"] = c.l2rho_error;
  d["wall_time_s"] = c.wall_time_s;
  d["error"] = c.error;
  return d;
}

py::dict rate_to_dict(const RateSummary& r) {
  py::dict d;
  d["operator"] = std::string(to_string(r.op));
  d["kernel"] = r.kernel;
  d["nsr"] = r.nsr;
  d["regularizer"] = std::string(short_name(r.regularizer));
  d["mean_rate"] = r.mean_rate;
  d["sd_rate"] = r.sd_rate;
  d["per_seed"] = r.per_seed;
  return d;
}

SpectralSystem system_of(const Matrix& A, const Vector& b, const Matrix& B, double rank_tol) {
  return SpectralSystem::from(A, b, B, rank_tol);
}

}  // namespace

PYBIND11_MODULE(_dartr, m) {
  m.doc() = "Data-adaptive RKHS regularization for learning radial kernels in operators";

  static py::exception<Error> dartr_error(m, "DartrError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = dartr_error;
      py::object inst = exc(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      inst.attr("stage") = e.stage();
      PyErr_SetObject(dartr_error.ptr(), inst.ptr());
    }
  });

  py::enum_<OperatorKind>(m, "OperatorKind")
      .value("LinearIntegral", OperatorKind::LinearIntegral)
      .value("NonlinearMeanField", OperatorKind::NonlinearMeanField)
      .value("Nonlocal", OperatorKind::Nonlocal);
  py::enum_<RegularizerKind>(m, "RegularizerKind")
      .value("ProjectedL2small", RegularizerKind::ProjectedL2small)
      .value("ProjectedL2rho", RegularizerKind::ProjectedL2rho)
      .value("SidaRkhs", RegularizerKind::SidaRkhs);
  py::enum_<BasisKind>(m, "BasisKind")
      .value("PiecewiseConstant", BasisKind::PiecewiseConstant)
      .value("BSpline", BasisKind::BSpline);
  py::enum_<NoiseNorm>(m, "NoiseNorm").value("Rms", NoiseNorm::Rms).value("L2", NoiseNorm::L2);
  py::enum_<LambdaFloor>(m, "LambdaFloor")
      .value("SmallestRetained", LambdaFloor::SmallestRetained)
      .value("SmallestPositive", LambdaFloor::SmallestPositive);
  py::enum_<LCurveLoss>(m, "LCurveLoss").value("Excess", LCurveLoss::Excess).value("Full", LCurveLoss::Full);

  m.def("parse_operator", [](const std::string& s) { return parse_operator(s); });
  m.def("parse_regularizer", [](const std::string& s) { return parse_regularizer(s); });

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_readonly("name", &KernelSpec::name)
      .def_readonly("support_max", &KernelSpec::support_max)
      .def("__call__", [](const KernelSpec& k, double r) { return k(r); })
      .def("evaluate", [](const KernelSpec& k, const Vector& r) { return r.unaryExpr(k.phi).eval(); });
  m.def("kernel_by_name", [](const std::string& s) { return kernel_by_name(s); }, py::arg("name"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("op", &Dataset::op)
      .def_readonly("kernel_name", &Dataset::kernel_name)
      .def_property_readonly("x", [](const Dataset& d) { return d.x_grid.points(); })
      .def_property_readonly("dx", [](const Dataset& d) { return d.x_grid.dx(); })
      .def_readonly("u", &Dataset::u)
      .def_readonly("f", &Dataset::f)
      .def_readonly("f_clean", &Dataset::f_clean)
      .def_readonly("nsr", &Dataset::nsr)
      .def_readonly("seed", &Dataset::seed)
      .def_readonly("sigma", &Dataset::sigma);

  m.def(
      "generate_dataset",
      [](OperatorKind op, const std::string& kernel, double dx, double nsr, std::uint64_t seed, double x_min,
         double x_max, NoiseNorm norm) {
        return generate_dataset(op, kernel_by_name(kernel), standard_u_set(op), make_uniform_grid(x_min, x_max, dx),
                                nsr, seed, {}, norm);
      },
      py::arg("op"), py::arg("kernel"), py::arg("dx"), py::arg("nsr") = 0.0, py::arg("seed") = 0,
      py::arg("x_min") = -40.0, py::arg("x_max") = 40.0, py::arg("noise_norm") = NoiseNorm::Rms);
  m.def("add_noise", &add_noise, py::arg("clean"), py::arg("nsr"), py::arg("seed"),
        py::arg("noise_norm") = NoiseNorm::Rms);
  m.def("save_dataset", &save_dataset);
  m.def("load_dataset", &load_dataset);

  py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
      .def_property_readonly("r", [](const DiscreteMeasure& d) { return d.grid().points(); })
      .def_property_readonly("weights", &DiscreteMeasure::weights)
      .def_property_readonly("dx", &DiscreteMeasure::dx)
      .def("max_positive_point", &DiscreteMeasure::max_positive_point);
  m.def("exploration_measure", &exploration_measure, py::arg("dataset"), py::arg("radius"));
  m.def("estimate_support", &estimate_support, py::arg("dataset"), py::arg("rho"));
  m.def("support_for", &support_for, py::arg("dataset"), py::arg("rho"));

  py::class_<RegressionData>(m, "RegressionData")
      .def_property_readonly("r", [](const RegressionData& d) { return d.r_grid.points(); })
      .def_readonly("G", &RegressionData::G)
      .def_readonly("gNf", &RegressionData::gNf)
      .def_readonly("rho", &RegressionData::rho)
      .def_readonly("data_energy", &RegressionData::data_energy)
      .def_property_readonly("dx", &RegressionData::dx);
  m.def("assemble_regression_data", &assemble_regression_data, py::arg("dataset"), py::arg("R"));
  m.def("save_regression_data", &save_regression_data);
  m.def("load_regression_data", &load_regression_data);

  py::class_<HypothesisSpace>(m, "HypothesisSpace")
      .def_property_readonly("kind", &HypothesisSpace::kind)
      .def_property_readonly("degree", &HypothesisSpace::degree)
      .def_property_readonly("dimension", &HypothesisSpace::dimension)
      .def_property_readonly("support_bound", &HypothesisSpace::support_bound)
      .def("evaluate", &HypothesisSpace::evaluate)
      .def("combine", &HypothesisSpace::combine);
  m.def("build_hypothesis_space", &build_hypothesis_space, py::arg("kind"), py::arg("n"), py::arg("R"),
        py::arg("dx"), py::arg("degree") = 0);
  m.def("full_resolution_space", &full_resolution_space);

  py::class_<RegressionTriplet>(m, "RegressionTriplet")
      .def_readonly("A", &RegressionTriplet::A)
      .def_readonly("b", &RegressionTriplet::b)
      .def_readonly("B", &RegressionTriplet::B)
      .def_readonly("space", &RegressionTriplet::space)
      .def_readonly("rho", &RegressionTriplet::rho)
      .def_readonly("data_energy", &RegressionTriplet::data_energy);
  m.def("assemble_triplet", &assemble_triplet);

  m.def(
      "gen_eig",
      [](const Matrix& A, const Matrix& B, double rank_tol) {
        const auto d = gen_eig(A, B, rank_tol);
        return py::make_tuple(d.lambda, d.V, d.rank);
      },
      py::arg("A"), py::arg("B"), py::arg("rank_tol") = kDefaultRankTol,
      "Returns (eigenvalues, eigenvectors, rank) with V^T B V = I.");
  m.def(
      "rkhs_norm_matrix",
      [](const Matrix& A, const Matrix& B, double rank_tol) { return rkhs_norm_matrix(gen_eig(A, B, rank_tol)); },
      py::arg("A"), py::arg("B"), py::arg("rank_tol") = kDefaultRankTol);
  m.def(
      "solve_regularized",
      [](const Matrix& A, const Vector& b, const Matrix& B, RegularizerKind kind, double lambda, double rank_tol) {
        return solve_regularized(system_of(A, b, B, rank_tol), kind, lambda);
      },
      py::arg("A"), py::arg("b"), py::arg("B"), py::arg("kind"), py::arg("lam"),
      py::arg("rank_tol") = kDefaultRankTol);
  m.def(
      "solve_regularized_minnorm",
      [](const Matrix& A, const Vector& b, const Matrix& B, double lambda, double rank_tol) {
        return solve_regularized_minnorm(A, b, rkhs_inverse_sqrt(gen_eig(A, B, rank_tol)), lambda);
      },
      py::arg("A"), py::arg("b"), py::arg("B"), py::arg("lam"), py::arg("rank_tol") = kDefaultRankTol);
  m.def("loss_value", py::overload_cast<const Matrix&, const Vector&, const Vector&, double>(&loss_value),
        py::arg("A"), py::arg("b"), py::arg("c"), py::arg("rank_tol") = kDefaultRankTol);

  py::class_<LCurve>(m, "LCurve")
      .def_readonly("lambdas", &LCurve::lambdas)
      .def_readonly("loss", &LCurve::loss)
      .def_readonly("norm", &LCurve::norm)
      .def_readonly("xs", &LCurve::xs)
      .def_readonly("ys", &LCurve::ys)
      .def_readonly("curvature", &LCurve::curvature);
  m.def(
      "build_lcurve",
      [](const Matrix& A, const Vector& b, const Matrix& B, RegularizerKind kind, std::size_t n_lambda,
         LambdaFloor floor, double rank_tol, LCurveLoss loss, std::optional<double> data_energy) {
        SpectralSystem sys = system_of(A, b, B, rank_tol);
        sys.data_energy = data_energy;
        return build_lcurve(sys, kind, n_lambda, floor, loss);
      },
      py::arg("A"), py::arg("b"), py::arg("B"), py::arg("kind"), py::arg("n_lambda") = kDefaultLambdaCount,
      py::arg("floor") = LambdaFloor::SmallestRetained, py::arg("rank_tol") = kDefaultRankTol,
      py::arg("loss") = LCurveLoss::Excess, py::arg("data_energy") = py::none());
  m.def(
      "select_lambda",
      [](const LCurve& c) {
        const auto s = select_lambda(c);
        return py::make_tuple(s.lambda, s.index);
      },
      "Returns (lambda, index) of the interior curvature maximum.");
  m.def("parametric_curvature", &parametric_curvature, py::arg("xs"), py::arg("ys"), py::arg("t"));

  py::class_<EstimatorResult>(m, "EstimatorResult")
      .def_readonly("c", &EstimatorResult::c)
      .def_readonly("lam", &EstimatorResult::lambda)
      .def_readonly("loss", &EstimatorResult::loss)
      .def_readonly("reg_norm", &EstimatorResult::reg_norm)
      .def_readonly("regularizer", &EstimatorResult::regularizer)
      .def_readonly("space", &EstimatorResult::space);
  m.def(
      "fit_estimator",
      [](const RegressionTriplet& t, RegularizerKind kind, std::size_t n_lambda, double rank_tol,
         LCurveLoss loss) {
        FitOptions o;
        o.n_lambda = n_lambda;
        o.rank_tol = rank_tol;
        o.lcurve_loss = loss;
        return fit_estimator(t, kind, o);
      },
      py::arg("triplet"), py::arg("kind"), py::arg("n_lambda") = kDefaultLambdaCount,
      py::arg("rank_tol") = kDefaultRankTol, py::arg("lcurve_loss") = LCurveLoss::Excess);

  m.def("l2rho_error", &l2rho_error, py::arg("estimate"), py::arg("truth"), py::arg("rho"));
  m.def("fit_rate", &fit_rate, py::arg("dx_error"));

  m.def(
      "default_config", [] { return dump_study_config(StudyConfig{}); },
      "JSON text of the default study configuration.");
  m.def(
      "run_study",
      [](const std::string& config_json, std::optional<std::string> out_dir) {
        const StudyConfig cfg = parse_study_config(config_json);
        StudyResults res;
        {
          py::gil_scoped_release release;
          res = run_study(cfg);
          if (out_dir) emit_report(res, *out_dir);
        }
        py::list cells, rates;
        for (const auto& c : res.cells) cells.append(cell_to_dict(c));
        for (const auto& r : res.rates) rates.append(rate_to_dict(r));
        return py::make_tuple(cells, rates);
      },
      py::arg("config_json") = "{}", py::arg("out_dir") = py::none(),
      "Runs a study; returns (cells, rates) as lists of dicts and optionally writes the report.");
}
