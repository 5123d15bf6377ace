#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <tuple>

#include "rothe/analysis.hpp"
#include "rothe/experiment.hpp"
#include "rothe/spectral.hpp"
#include "rothe/stochastics.hpp"

namespace py = pybind11;
using namespace rothe;

namespace {

using Runner = int (*)(const CommandOptions&, std::ostream&, std::ostream&);

std::tuple<int, std::string, std::string> run_command(Runner runner, const std::filesystem::path& config,
                                                      std::optional<std::uint64_t> seed,
                                                      std::optional<std::size_t> samples,
                                                      std::optional<std::filesystem::path> output_dir,
                                                      std::optional<std::string> format) {
    CommandOptions options;
    options.config = config;
    options.seed = seed;
    options.samples = samples;
    options.output_dir = std::move(output_dir);
    if (format) {
        if (*format == "csv") {
            options.format = OutputFormat::csv;
        } else if (*format == "jsonl") {
            options.format = OutputFormat::jsonl;
        } else {
            throw py::value_error("format must be 'csv' or 'jsonl'");
        }
    }
    std::ostringstream out;
    std::ostringstream err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = runner(options, out, err);
    }
    return {code, out.str(), err.str()};
}

SpectralVector to_vector(std::vector<double> coeffs) { return SpectralVector(std::move(coeffs)); }

}  // namespace

PYBIND11_MODULE(_rothe, m) {
    m.doc() = "Linearly implicit Euler schemes for spectral SPDE models";

    py::class_<SpectralOperator>(m, "SpectralOperator")
        .def(py::init([](std::vector<double> eigenvalues) { return SpectralOperator(std::move(eigenvalues)); }),
             py::arg("eigenvalues"))
        .def_property_readonly("eigenvalues",
                               [](const SpectralOperator& op) {
                                   return std::vector<double>(op.eigenvalues().begin(), op.eigenvalues().end());
                               })
        .def_property_readonly("label", &SpectralOperator::label)
        .def_property_readonly("growth_exponent", &SpectralOperator::growth_exponent)
        .def("__len__", &SpectralOperator::size);

    m.def("dirichlet_laplacian_1d", &make_dirichlet_laplacian_1d, py::arg("modes"));
    m.def("power_law_operator", &make_power_law_operator, py::arg("modes"), py::arg("scale"), py::arg("exponent"));

    m.def(
        "fractional_norm",
        [](const SpectralOperator& op, std::vector<double> v, double s) {
            return fractional_norm(op, to_vector(std::move(v)), SobolevIndex{s});
        },
        py::arg("op"), py::arg("coeffs"), py::arg("s"));
    m.def(
        "apply_resolvent_power",
        [](const SpectralOperator& op, std::vector<double> v, double tau, unsigned n) {
            return apply_resolvent_power(op, to_vector(std::move(v)), tau, n).coeffs;
        },
        py::arg("op"), py::arg("coeffs"), py::arg("tau"), py::arg("n") = 1);
    m.def(
        "resolvent_operator_norm_bound",
        [](double s, unsigned n, double tau, double lambda1) {
            return resolvent_operator_norm_bound(SobolevIndex{s}, n, tau, lambda1);
        },
        py::arg("s"), py::arg("n"), py::arg("tau"), py::arg("lambda1"));
    m.def(
        "resolvent_operator_norm",
        [](const SpectralOperator& op, double s, unsigned n, double tau) {
            return resolvent_operator_norm(op, SobolevIndex{s}, n, tau);
        },
        py::arg("op"), py::arg("s"), py::arg("n"), py::arg("tau"));
    m.def("max_rate", &max_rate, py::arg("sigma"), py::arg("beta"), py::arg("alpha"));

    py::class_<ConditionResult>(m, "ConditionResult")
        .def_readonly("name", &ConditionResult::name)
        .def_readonly("passed", &ConditionResult::passed)
        .def_readonly("detail", &ConditionResult::detail);
    py::class_<AssumptionReport>(m, "AssumptionReport")
        .def_readonly("conditions", &AssumptionReport::conditions)
        .def_readonly("partial_trace", &AssumptionReport::partial_trace)
        .def_readonly("trace_converges", &AssumptionReport::trace_converges)
        .def_readonly("delta_max", &AssumptionReport::delta_max)
        .def_readonly("intermediate_space_index", &AssumptionReport::intermediate_space_index)
        .def("all_passed", &AssumptionReport::all_passed);
    m.def("check_assumptions", &check_assumptions, py::arg("op"), py::arg("alpha"), py::arg("sigma"),
          py::arg("beta"), py::arg("rho"));

    m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("index"));
    m.def(
        "sample_increments",
        [](std::uint64_t seed, std::size_t fine_steps, std::size_t modes, double horizon) {
            const auto path = sample_path(seed, fine_steps, modes, horizon);
            std::vector<std::vector<double>> rows(modes);
            for (std::size_t j = 0; j < modes; ++j) {
                const auto inc = path.mode_increments(j);
                rows[j].assign(inc.begin(), inc.end());
            }
            return rows;
        },
        py::arg("seed"), py::arg("fine_steps"), py::arg("modes"), py::arg("horizon"),
        "Wiener increments as a list of per-mode lists.");

    m.def("ou_exact_mse", &ou_exact_mse, py::arg("lam"), py::arg("c"), py::arg("u0"), py::arg("T"), py::arg("K"));

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("rate", &RateFit::rate)
        .def_readonly("halfwidth", &RateFit::halfwidth)
        .def_readonly("points", &RateFit::points);
    m.def(
        "fit_rate",
        [](std::vector<double> taus, std::vector<double> errors, std::vector<double> stderrs) {
            return fit_rate(taus, errors, stderrs);
        },
        py::arg("taus"), py::arg("errors"), py::arg("stderrs") = std::vector<double>{});

    const auto bind_command = [&m](const char* name, Runner runner) {
        m.def(
            name,
            [runner](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> samples, std::optional<std::filesystem::path> output_dir,
                     std::optional<std::string> format) {
                return run_command(runner, config, seed, samples, std::move(output_dir), std::move(format));
            },
            py::arg("config"), py::arg("seed") = py::none(), py::arg("samples") = py::none(),
            py::arg("output_dir") = py::none(), py::arg("format") = py::none(),
            "Returns (exit_code, stdout, stderr).");
    };
    bind_command("check", &cmd_check);
    bind_command("convergence", &cmd_convergence);
    bind_command("propagation", &cmd_propagation);
}
