#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "torsion/opcalc.hpp"
#include "torsion/recipes.hpp"

namespace py = pybind11;
using namespace torsion;

namespace {

Chi chi_from(const std::string& name)
{
    if (name == "pow2") return Chi::pow2();
    if (name == "linear") return Chi::linear();
    throw ValidationError("chi", "expected 'pow2' or 'linear'");
}

ThetaSeries series(std::vector<double> lambdas)
{
    std::sort(lambdas.begin(), lambdas.end());
    ThetaSeries th;
    th.lambdas = std::move(lambdas);
    return th;
}

// configs cross the boundary as JSON text; the Python side wraps json.dumps/loads
std::pair<int, std::string> run_config(const std::string& text)
{
    std::ostringstream log;
    const RunResult r = run(validate(json::parse(text)), log);
    json s = r.summary;
    s["message"] = r.message;
    s["files"] = r.files;
    return {r.exit_code, s.dump()};
}

}  // namespace

PYBIND11_MODULE(_torsion, m)
{
    m.doc() = "Spectra, heat traces and zeta functions of radial metrics on O(m) over the sphere";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<MetricProfile>(m, "MetricProfile")
        .def_readonly("degree", &MetricProfile::degree)
        .def_readonly("kind", &MetricProfile::kind)
        .def("__call__", [](const MetricProfile& p, double u) { return p(u); })
        .def("sample", [](const MetricProfile& p, const std::vector<double>& us) {
            std::vector<double> v;
            v.reserve(us.size());
            for (double u : us) v.push_back(p(u));
            return v;
        });
    py::class_<BaseProfile>(m, "BaseProfile")
        .def_readonly("kind", &BaseProfile::kind)
        .def("__call__", [](const BaseProfile& b, double u) { return b(u); });

    m.def("fubini_study", &make_fubini_study, py::arg("m"));
    m.def("canonical", &make_canonical, py::arg("m"));
    m.def("pnorm", [](int deg, int p, const std::string& chi) { return make_pnorm(deg, chi_from(chi), p); },
          py::arg("m"), py::arg("p"), py::arg("chi") = "pow2");
    m.def("fs_base", &fs_base);
    m.def("tx_base", &tx_base, py::arg("p"));

    py::class_<Discretization>(m, "Discretization")
        .def(py::init([](double u_min, double u_max, int n, int kmax) { return Discretization{u_min, u_max, n, kmax}; }),
             py::arg("u_min") = -14.0, py::arg("u_max") = 14.0, py::arg("n_nodes") = 4096, py::arg("kmax") = -1)
        .def_readwrite("u_min", &Discretization::u_min)
        .def_readwrite("u_max", &Discretization::u_max)
        .def_readwrite("n_nodes", &Discretization::n_nodes)
        .def_readwrite("kmax", &Discretization::k_max);

    py::class_<Spectrum>(m, "Spectrum")
        .def_readonly("kernel_dim", &Spectrum::kernel_dim)
        .def_readonly("first_nonzero", &Spectrum::first_nonzero)
        .def_readonly("gap_ratio", &Spectrum::gap_ratio)
        .def_readonly("complete", &Spectrum::complete)
        .def_property_readonly("lambdas",
                               [](const Spectrum& s) {
                                   std::vector<double> v;
                                   for (const auto& e : s.entries) v.push_back(e.lambda);
                                   return v;
                               })
        .def_property_readonly("modes",
                               [](const Spectrum& s) {
                                   std::vector<int> v;
                                   for (const auto& e : s.entries) v.push_back(e.mode);
                                   return v;
                               })
        .def("group_sizes", &Spectrum::group_sizes)
        .def("positive", &Spectrum::positive)
        .def("theta", [](const Spectrum& s, double t) { return theta(s, t); }, py::arg("t"))
        .def("to_csv", [](const Spectrum& s) { return spectrum_csv(s); });

    m.def(
        "spectrum",
        [](const MetricProfile& psi, const BaseProfile& base, const Discretization& d, int n_per_mode) {
            SpectrumOptions opt;
            opt.n_per_mode = n_per_mode;
            py::gil_scoped_release release;
            return compute_spectrum(psi, base, d, opt);
        },
        py::arg("metric"), py::arg("base") = fs_base(), py::arg("disc") = Discretization{}, py::arg("n_per_mode") = 0);

    m.def(
        "zeta_prime0",
        [](std::vector<double> lambdas, double t_lo, double t_hi) {
            const ThetaSeries th = series(std::move(lambdas));
            return zeta_prime0(th, fit_expansion(th, FitWindow{t_lo, t_hi})).value;
        },
        py::arg("lambdas"), py::arg("t_lo"), py::arg("t_hi"),
        "zeta'(0) of a finite list, with the small-t expansion fitted on [t_lo, t_hi]");
    m.def(
        "zeta",
        [](std::vector<double> lambdas, double s) { return zeta_at(series(std::move(lambdas)), s).value; },
        py::arg("lambdas"), py::arg("s"));
    m.def(
        "heat_fit",
        [](std::vector<double> lambdas, double t_lo, double t_hi, int degree) {
            return fit_expansion(series(std::move(lambdas)), FitWindow{t_lo, t_hi}, degree).coeffs;
        },
        py::arg("lambdas"), py::arg("t_lo"), py::arg("t_hi"), py::arg("degree") = 3);

    auto op = m.def_submodule("opcalc", "finite-dimensional singular values and trace norms");
    op.def("singular_values", [](const Eigen::MatrixXd& T) { return opcalc::singular_values(T); });
    op.def("nuclear_norm", [](const Eigen::MatrixXd& T) { return opcalc::nuclear_norm(T); });
    op.def("op_norm", [](const Eigen::MatrixXd& T) { return opcalc::op_norm(T); });

    m.def("recipe_names", &recipe_names);
    m.def("_canonical_config", [](const std::string& text) { return validate(json::parse(text)).canonical(); });
    m.def("_run", &run_config);
}
