#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "vpstab/bounds.hpp"
#include "vpstab/cli.hpp"
#include "vpstab/error.hpp"
#include "vpstab/orlicz.hpp"
#include "vpstab/transport.hpp"
#include "vpstab/verify.hpp"
#include "vpstab/version.hpp"

namespace py = pybind11;
using namespace vpstab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DiscreteMeasure to_measure(const Array& points, const Array& weights) {
    if (points.ndim() != 2) throw PreconditionError("points must be a 2-D array (atoms x dim)");
    if (weights.ndim() != 1 || weights.shape(0) != points.shape(0))
        throw PreconditionError("weights must be 1-D with one entry per atom");
    DiscreteMeasure m;
    m.dim = static_cast<int>(points.shape(1));
    m.points.assign(points.data(), points.data() + points.size());
    m.weights.assign(weights.data(), weights.data() + weights.size());
    return m;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

EnvelopeParams params(double alpha, double A, double B, double c, double C, double eps, double T, double cprime) {
    EnvelopeParams p;
    p.idx = OrliczIndex::make(alpha);
    p.A = A;
    p.B = B;
    p.c = c;
    p.C = C;
    p.eps = eps;
    p.T = T;
    p.cprime = cprime;
    return p;
}

}  // namespace

PYBIND11_MODULE(_vpstab, m) {
    m.doc() = "Orlicz norms, stability envelopes and exact W1 for particle Vlasov-Poisson runs";
    m.attr("__version__") = std::string(kVersion);

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
    py::register_exception<SizeError>(m, "SizeError", base.ptr());
    py::register_exception<AccuracyError>(m, "AccuracyError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.attr("inf") = std::numeric_limits<double>::infinity();

    m.def("phi", [](double tau, double alpha) { return phi_alpha(tau, OrliczIndex::make(alpha)); }, py::arg("tau"),
          py::arg("alpha"));
    m.def("psi", [](double tau, double alpha) { return psi_alpha(tau, OrliczIndex::make(alpha)); }, py::arg("tau"),
          py::arg("alpha"));
    m.def(
        "luxemburg_norm",
        [](const Array& rho, double cell_volume, double alpha) {
            return luxemburg_norm(to_vector(rho), cell_volume, OrliczIndex::make(alpha));
        },
        py::arg("rho"), py::arg("cell_volume"), py::arg("alpha"),
        "Luxemburg norm of a piecewise-constant density with equal cell volumes.");
    m.def(
        "lp_sup_norm",
        [](const Array& rho, double cell_volume, double alpha, double p_max) {
            const SupNorm s = lp_sup_norm(to_vector(rho), cell_volume, OrliczIndex::make(alpha), p_max);
            return py::make_tuple(s.value, s.argmax_p);
        },
        py::arg("rho"), py::arg("cell_volume"), py::arg("alpha"), py::arg("p_max") = 200.0,
        "Returns (value, argmax p) of max_p p^(-1/alpha) ||rho||_p.");

    m.def("g_closed", [](double t, double A, double c, double alpha, bool extrapolate) {
        return g_closed(t, A, c, OrliczIndex::make(alpha), extrapolate);
    }, py::arg("t"), py::arg("A"), py::arg("c"), py::arg("alpha"), py::arg("extrapolate") = false);
    m.def("g_ode", [](double t, double A, double c, double alpha, double dt) {
        return g_ode(t, A, c, OrliczIndex::make(alpha), dt);
    }, py::arg("t"), py::arg("A"), py::arg("c"), py::arg("alpha"), py::arg("dt") = 1e-3);
    m.def("t_star", [](double alpha, double A, double c) { return t_star(OrliczIndex::make(alpha), A, c); },
          py::arg("alpha"), py::arg("A"), py::arg("c"));
    m.def(
        "envelope_w1",
        [](double t, double alpha, double B, double c, double C, double eps, double T) {
            return envelope_w1(t, params(alpha, 1e-3, B, c, C, eps, T, 1.0));
        },
        py::arg("t"), py::arg("alpha"), py::arg("B"), py::arg("c") = 1.0, py::arg("C") = 1.0, py::arg("eps") = 0.1,
        py::arg("T") = 1.0);
    m.def(
        "envelope_x",
        [](double t, double alpha, double X0, double V0, double c, double T) {
            return envelope_x(t, params(alpha, 1e-3, 1e-3, c, 1.0, 0.1, T, 1.0), X0, V0);
        },
        py::arg("t"), py::arg("alpha"), py::arg("X0"), py::arg("V0"), py::arg("c") = 1.0, py::arg("T") = 1.0);

    m.def(
        "w1_exact",
        [](const Array& xa, const Array& wa, const Array& xb, const Array& wb) {
            const TransportPlan plan = w1_exact(to_measure(xa, wa), to_measure(xb, wb));
            py::list entries;
            for (const auto& e : plan.entries) entries.append(py::make_tuple(e.source, e.target, e.mass));
            return py::make_tuple(plan.cost, entries);
        },
        py::arg("points_a"), py::arg("weights_a"), py::arg("points_b"), py::arg("weights_b"),
        "Exact W1 with Euclidean cost. Returns (cost, [(i, j, mass), ...]).");
    m.def(
        "w1_sinkhorn",
        [](const Array& xa, const Array& wa, const Array& xb, const Array& wb, double reg, int max_iter) {
            const SinkhornResult r = w1_sinkhorn(to_measure(xa, wa), to_measure(xb, wb), reg, max_iter);
            return py::dict(py::arg("cost") = r.cost, py::arg("marginal_violation") = r.marginal_violation,
                            py::arg("iterations") = r.iterations, py::arg("converged") = r.converged);
        },
        py::arg("points_a"), py::arg("weights_a"), py::arg("points_b"), py::arg("weights_b"), py::arg("reg") = 1e-2,
        py::arg("max_iter") = 1000);

    m.def(
        "kernel_lemma_ratio",
        [](const std::string& density, double density_alpha, double R, double alpha) {
            TestDensity g = density == "uniform-ball"    ? TestDensity::uniform_ball(2)
                            : density == "gaussian-like" ? TestDensity::gaussian_like(2)
                                                         : TestDensity::borderline(2, density_alpha);
            const double x[2] = {R / 2, 0.0}, y[2] = {-R / 2, 0.0};
            return kernel_lemma_ratio(g, x, y, OrliczIndex::make(alpha));
        },
        py::arg("density"), py::arg("density_alpha"), py::arg("R"), py::arg("alpha"),
        "Planar kernel-estimate ratio with x, y placed symmetrically about the density centre.");

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "vpstab");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
