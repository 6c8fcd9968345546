#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>

#include "distortlab/alignment.hpp"
#include "distortlab/ball.hpp"
#include "distortlab/error.hpp"
#include "distortlab/experiment.hpp"
#include "distortlab/linalg.hpp"
#include "distortlab/maps.hpp"
#include "distortlab/parallel.hpp"
#include "distortlab/pde.hpp"
#include "distortlab/report.hpp"
#include "distortlab/theorems.hpp"

namespace py = pybind11;
using namespace distortlab;

namespace {

// pybind11 holders cannot be shared_ptr<const T>, so maps cross the boundary
// wrapped in this handle.
struct MapHandle {
    MapPtr ptr;
    const DifferentiableMap& operator*() const { return *ptr; }
};

Ball to_ball(const Vector& center, double radius) { return make_ball(center, radius); }

py::dict theorem_dict(const TheoremReport& t) {
    py::dict d;
    d["eps_hat"] = t.eps_hat;
    d["t_b"] = t.t_b;
    d["mean_dev"] = t.mean_dev;
    d["p4_dev"] = t.p4_dev;
    d["max_dev"] = t.max_dev;
    std::vector<std::pair<double, double>> tail;
    for (const TailPoint& p : t.tail) tail.emplace_back(p.lambda, p.fraction);
    d["tail"] = tail;
    d["tail_bounds"] = t.tail_bounds;
    d["calibration_c"] = t.calibration_c;
    d["tail_pass"] = t.tail_pass;
    d["ratio_linear"] = t.ratio_linear;
    d["ratio_sqrt"] = t.ratio_sqrt;
    d["ratio_p4_sqrt"] = t.ratio_p4_sqrt;
    return d;
}

ExperimentConfig config_from(const std::map<std::string, std::string>& settings) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Distortion, BMO and alignment experiments for near-isometric maps";
    m.attr("__version__") = DISTORTLAB_VERSION;

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_ArithmeticError);
    py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);

    m.def("set_thread_count", &set_thread_count, py::arg("n"));

    m.def("hs_norm", &hs_norm, py::arg("m"));
    m.def("polar_orthogonal_factor", &polar_orthogonal_factor, py::arg("m"));
    m.def(
        "nearest_orthogonal",
        [](const Matrix& a, bool proper) {
            return nearest_orthogonal(a, proper ? OrthogonalClass::Proper : OrthogonalClass::Any);
        },
        py::arg("m"), py::arg("proper") = false);
    m.def("exp_antisymmetric", &exp_antisymmetric, py::arg("a"));
    m.def("random_rotation", &random_rotation, py::arg("dim"), py::arg("seed"));

    py::class_<EuclideanMotion>(m, "EuclideanMotion")
        .def_readonly("rotation", &EuclideanMotion::rotation)
        .def_readonly("translation", &EuclideanMotion::translation)
        .def_readonly("proper", &EuclideanMotion::proper)
        .def("apply", &EuclideanMotion::apply)
        .def("inverse", &EuclideanMotion::inverse);

    py::class_<MapHandle>(m, "Map")
        .def_property_readonly("dim", [](const MapHandle& h) { return h.ptr->dim(); })
        .def_property_readonly("name", [](const MapHandle& h) { return h.ptr->name(); })
        .def("__call__", [](const MapHandle& h, const Vector& x) { return h.ptr->eval(x); }, py::arg("x"))
        .def("jacobian", [](const MapHandle& h, const Vector& x) { return h.ptr->jacobian(x); }, py::arg("x"));

    m.def("identity_map", [](int dim) { return MapHandle{make_identity_map(dim)}; }, py::arg("dim"));
    m.def(
        "affine_map", [](const Matrix& a, const Vector& b) { return MapHandle{make_affine_map(a, b)}; },
        py::arg("linear"), py::arg("offset"));
    m.def(
        "slow_twist",
        [](int dim, const std::string& profile, double eps, double clamp, std::optional<Matrix> theta) {
            if (profile != "log" && profile != "arctan") throw InvalidInput("profile: expected arctan or log");
            const AngleProfile p = profile == "log" ? log_profile(eps / 2.0, clamp) : arctan_profile(eps);
            return MapHandle{make_slow_twist(dim, p, theta ? *theta : Matrix::Identity(dim, dim))};
        },
        py::arg("dim"), py::arg("profile") = "arctan", py::arg("eps") = 0.1, py::arg("clamp") = 0.1,
        py::arg("theta") = py::none());

    m.def(
        "distortion_estimate",
        [](const MapHandle& map, const Vector& center, double radius, std::size_t n, std::uint64_t seed) {
            const DistortionReport r = distortion_estimate(*map, to_ball(center, radius), n, seed);
            return py::make_tuple(r.eps_hat, r.worst_point);
        },
        py::arg("map"), py::arg("center"), py::arg("radius"), py::arg("n"), py::arg("seed"));
    m.def(
        "theorem1_check",
        [](const MapHandle& map, const Vector& c, double r, std::size_t n, std::uint64_t seed) {
            return theorem_dict(theorem1_check(*map, to_ball(c, r), n, seed));
        },
        py::arg("map"), py::arg("center"), py::arg("radius"), py::arg("n"), py::arg("seed"));
    m.def(
        "theorem2_check",
        [](const MapHandle& map, const Vector& c, double r, std::size_t n, std::uint64_t seed) {
            return theorem_dict(theorem2_check(*map, to_ball(c, r), n, seed));
        },
        py::arg("map"), py::arg("center"), py::arg("radius"), py::arg("n"), py::arg("seed"));
    m.def(
        "tail_check",
        [](const MapHandle& map, const Vector& c, double r, std::size_t n, std::uint64_t seed,
           std::vector<double> lambdas) {
            return theorem_dict(tail_check(*map, to_ball(c, r), n, seed, lambdas));
        },
        py::arg("map"), py::arg("center"), py::arg("radius"), py::arg("n"), py::arg("seed"),
        py::arg("lambdas") = std::vector<double>{1.0, 1.5, 2.0, 3.0, 4.0});
    m.def(
        "approximation_lemma_check",
        [](const MapHandle& map, double eps, std::size_t n, std::uint64_t seed) {
            const ApproximationResult a = approximation_lemma_check(*map, eps, n, seed);
            return py::make_tuple(a.motion, a.sup_err);
        },
        py::arg("map"), py::arg("eps"), py::arg("n"), py::arg("seed"));

    m.def(
        "antisymmetric_approximation",
        [](int dim, double half_width, int points, std::vector<double> values) {
            const AntisymmetricFit f = antisymmetric_approximation(GridField(dim, half_width, points, std::move(values)));
            return py::make_tuple(f.s, f.residual, f.hypothesis_norm);
        },
        py::arg("dim"), py::arg("half_width"), py::arg("points"), py::arg("values"),
        "values: node-major grid samples, D components per node, first axis slowest");

    m.def("pairwise_distortion", [](const Matrix& y, const Matrix& z) {
        return pairwise_distortion(make_point_set(y), make_point_set(z));
    }, py::arg("source"), py::arg("target"), "points are columns");
    m.def(
        "procrustes_align",
        [](const Matrix& y, const Matrix& z, bool proper) {
            const AlignmentResult a = procrustes_align(make_point_set(y), make_point_set(z), proper);
            return py::make_tuple(a.motion, a.max_rel_err, a.rms_err);
        },
        py::arg("source"), py::arg("target"), py::arg("require_proper") = false);

    m.def(
        "run_subcommand",
        [](const std::string& name, const std::map<std::string, std::string>& settings, bool include_wall_time) {
            const ExperimentConfig cfg = config_from(settings);
            const Report r = run_subcommand(name, cfg);
            return py::make_tuple(exit_code(r), serialize_report(r, parse_format(cfg.format), include_wall_time));
        },
        py::arg("name"), py::arg("settings") = std::map<std::string, std::string>{},
        py::arg("include_wall_time") = true, "returns (exit_code, report_text)");
}
