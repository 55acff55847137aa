#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "maserlab/config.hpp"
#include "maserlab/json_io.hpp"
#include "maserlab/limit_cycle.hpp"
#include "maserlab/robustness.hpp"
#include "maserlab/stability.hpp"
#include "maserlab/sweep.hpp"

#ifdef MASERLAB_HAVE_CLI
#include "cli.hpp"
#endif

namespace py = pybind11;
using namespace maserlab;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Feedback-driven nonlinear spin ensembles";
    m.attr("__version__") = MASERLAB_VERSION;

    // Translators run newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InsufficientData>(m, "InsufficientData", PyExc_ValueError);

    m.def("hz_to_rad", &hz_to_rad);

    py::class_<PhysicalParams>(m, "PhysicalParams")
        .def(py::init([](double t1, double t2, double p0, double alpha) {
                 PhysicalParams p{t1, t2, p0, alpha};
                 p.validate();
                 return p;
             }),
             py::arg("t1") = kDefaultT1, py::arg("t2") = kDefaultT2, py::arg("p0") = kDefaultP0,
             py::arg("alpha") = 0.0)
        .def_readwrite("t1", &PhysicalParams::t1)
        .def_readwrite("t2", &PhysicalParams::t2)
        .def_readwrite("p0", &PhysicalParams::p0)
        .def_readwrite("alpha", &PhysicalParams::alpha)
        .def("critical_alpha", &PhysicalParams::critical_alpha)
        .def("with_alpha_ratio", &PhysicalParams::with_alpha_ratio, py::arg("ratio"))
        .def("__repr__", [](const PhysicalParams& p) {
            std::ostringstream os;
            os << "PhysicalParams(t1=" << p.t1 << ", t2=" << p.t2 << ", p0=" << p.p0 << ", alpha=" << p.alpha << ")";
            return os.str();
        });

    py::class_<FrequencyDistribution>(m, "FrequencyDistribution")
        .def_static("uniform", [](double c, double w) { return FrequencyDistribution(Uniform{c, w}); },
                    py::arg("center"), py::arg("width"))
        .def_static("root", [](double c, double w) { return FrequencyDistribution(Root{c, w}); }, py::arg("center"),
                    py::arg("width"))
        .def_static("single", &FrequencyDistribution::single, py::arg("omega"))
        .def_static("dirac_comb",
                    [](std::vector<double> f, std::vector<double> w) {
                        return FrequencyDistribution(DiracComb{std::move(f), std::move(w)});
                    },
                    py::arg("freqs"), py::arg("weights"))
        .def_static("tabulated",
                    [](std::vector<double> g, std::vector<double> d) {
                        return FrequencyDistribution(Tabulated{std::move(g), std::move(d)});
                    },
                    py::arg("grid"), py::arg("density"))
        .def_property_readonly("kind", &FrequencyDistribution::kind)
        .def("mean", &FrequencyDistribution::mean)
        .def("support", &FrequencyDistribution::support)
        .def("density", [](const FrequencyDistribution& d, double w) { return density(d, w); });

    py::class_<EquilibriumTilt>(m, "EquilibriumTilt")
        .def(py::init<>())
        .def_readwrite("magnitude", &EquilibriumTilt::magnitude)
        .def_readwrite("phase", &EquilibriumTilt::phase);

    py::class_<IntegrationConfig>(m, "IntegrationConfig")
        .def(py::init<>())
        .def_static("rotating", &IntegrationConfig::rotating, py::arg("omega_r"), py::arg("dt") = 5e-3)
        .def_readwrite("dt", &IntegrationConfig::dt)
        .def_readwrite("t_end", &IntegrationConfig::t_end)
        .def_readwrite("record_every", &IntegrationConfig::record_every)
        .def_readwrite("nodes", &IntegrationConfig::nodes)
        .def_readwrite("rotating_frame", &IntegrationConfig::rotating_frame)
        .def_readwrite("seed", &IntegrationConfig::seed)
        .def_property(
            "tilt",
            [](const IntegrationConfig& c) -> std::optional<EquilibriumTilt> {
                if (const auto* t = std::get_if<EquilibriumTilt>(&c.initial)) return *t;
                return std::nullopt;
            },
            [](IntegrationConfig& c, const EquilibriumTilt& t) { c.initial = t; })
        .def("sample_dt", &IntegrationConfig::sample_dt);

    py::class_<Trajectory>(m, "Trajectory")
        .def("__len__", &Trajectory::size)
        .def_property_readonly("t", [](const Trajectory& t) { return to_array(t.times); })
        .def_property_readonly("px", [](const Trajectory& t) { return to_array(t.px()); })
        .def_property_readonly("py", [](const Trajectory& t) { return to_array(t.py()); })
        .def_property_readonly("pz", [](const Trajectory& t) { return to_array(t.pz()); })
        .def_readonly("sample_dt", &Trajectory::sample_dt)
        .def("window", &Trajectory::window, py::arg("t_start"))
        .def("max_transverse", &Trajectory::max_transverse);

    m.def(
        "simulate",
        [](const PhysicalParams& p, const FrequencyDistribution& d, const IntegrationConfig& c) {
            py::gil_scoped_release release;
            return simulate(p, d, c);
        },
        py::arg("params"), py::arg("dist"), py::arg("config") = IntegrationConfig{});

    py::class_<LimitCycleSolution>(m, "LimitCycleSolution")
        .def_readonly("omega_s", &LimitCycleSolution::omega_s)
        .def_readonly("amp2", &LimitCycleSolution::amp2)
        .def_readonly("residuals", &LimitCycleSolution::residuals)
        .def_readonly("iterations", &LimitCycleSolution::iterations)
        .def_readonly("pinned", &LimitCycleSolution::pinned)
        .def_readonly("warnings", &LimitCycleSolution::warnings)
        .def("amplitude", &LimitCycleSolution::amplitude)
        .def("to_dict", [](const LimitCycleSolution& s) { return to_py(to_json(s)); })
        .def("profile", [](const LimitCycleSolution& s, const PhysicalParams& p, const std::vector<double>& w) {
            const auto pts = profile(s, p, w);
            std::vector<std::complex<double>> pt;
            std::vector<double> pz;
            for (const auto& q : pts) {
                pt.push_back(q.pt);
                pz.push_back(q.pz);
            }
            return py::make_tuple(py::array(py::cast(pt)), to_array(pz));
        });

    m.def("solve_limit_cycle",
          [](const PhysicalParams& p, const FrequencyDistribution& d) { return solve_limit_cycle(p, d); },
          py::arg("params"), py::arg("dist"), "Self-consistent limit cycle, or None in the no-signal region");

    m.def(
        "limit_cycle_stable",
        [](const PhysicalParams& p, const FrequencyDistribution& d, const LimitCycleSolution& s,
           const std::string& method, int nodes) {
            StabilityOptions o;
            if (method == "characteristic")
                o.method = StabilityMethod::characteristic;
            else if (method == "jacobian")
                o.method = StabilityMethod::jacobian;
            else if (method != "both")
                throw InvalidArgument("method must be characteristic, jacobian or both");
            o.jacobian_nodes = nodes;
            return to_py(to_json(limit_cycle_stable(p, d, s, o)));
        },
        py::arg("params"), py::arg("dist"), py::arg("solution"), py::arg("method") = "both",
        py::arg("nodes") = kDefaultNodes);

    m.def(
        "no_signal_threshold",
        [](const PhysicalParams& p, const FrequencyDistribution& d) -> std::optional<py::tuple> {
            const auto t = no_signal_threshold(p, d);
            if (!t) return std::nullopt;
            return py::make_tuple(t->alpha, t->omega_onset);
        },
        py::arg("params"), py::arg("dist"), "(alpha, omega_onset) in rad/s, or None");
    m.def("uniform_no_signal_threshold", &uniform_no_signal_threshold, py::arg("params"), py::arg("width"));

    m.def(
        "spectrum",
        [](const std::vector<double>& x, double dt, bool exclude_dc) {
            const auto s = spectrum(x, dt, exclude_dc);
            return py::make_tuple(to_array(s.freqs), to_array(s.amps));
        },
        py::arg("series"), py::arg("sample_dt"), py::arg("exclude_dc") = false,
        "Single-sided amplitude spectrum (freqs in Hz, amplitudes)");

    m.def(
        "lyapunov",
        [](const PhysicalParams& p, const FrequencyDistribution& d, const IntegrationConfig& c, double tau, int k,
           double transient) {
            LyapunovOptions o;
            o.tau = tau;
            o.k = k;
            o.transient = transient;
            py::gil_scoped_release release;
            const auto r = lyapunov(p, d, c, o);
            return std::make_pair(r.lambda, r.std_error);
        },
        py::arg("params"), py::arg("dist"), py::arg("config"), py::arg("tau") = 1.0, py::arg("k") = 2000,
        py::arg("transient") = 200.0, "Largest exponent and its standard error (1/s)");

    m.def(
        "analyze_point",
        [](const PhysicalParams& p, const FrequencyDistribution& d, const IntegrationConfig& c, double transient,
           int k) {
            AnalysisConfig a;
            a.integration = c;
            a.transient = transient;
            a.lyapunov.k = k;
            PointAnalysis r;
            {
                py::gil_scoped_release release;
                r = analyze_point(p, d, a);
            }
            return to_py(to_json(r.label));
        },
        py::arg("params"), py::arg("dist"), py::arg("config"), py::arg("transient") = 300.0, py::arg("k") = 2000,
        "Phase label with its evidence");

    m.def(
        "robustness_curve",
        [](const PhysicalParams& p, const FrequencyDistribution& d, const IntegrationConfig& c,
           const std::string& kind, const std::vector<double>& etas, int runs, double transient, int threads) {
            const auto k = noise_kind_from_string(kind);
            if (!k) throw InvalidArgument("kind must be field or gain");
            RobustnessOptions o;
            o.n_runs = runs;
            o.transient = transient;
            o.threads = threads;
            RobustnessCurve curve;
            {
                py::gil_scoped_release release;
                curve = robustness_curve(p, d, c, *k, etas, o);
            }
            py::list out;
            for (const auto& pt : curve.points)
                out.append(py::dict(py::arg("eta") = pt.eta, py::arg("r_mean") = pt.r_mean,
                                    py::arg("r_std") = pt.r_std, py::arg("n_ok") = pt.n_ok));
            return out;
        },
        py::arg("params"), py::arg("dist"), py::arg("config"), py::arg("kind"), py::arg("etas"),
        py::arg("runs") = 50, py::arg("transient") = 300.0, py::arg("threads") = 1);

    m.def(
        "parse_config",
        [](const std::string& text) {
            const auto c = parse_config(text);
            return py::make_tuple(to_py(c.canonical()), c.hash());
        },
        py::arg("text"), "Validated canonical configuration and its hash");

#ifdef MASERLAB_HAVE_CLI
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a command-line subcommand; returns (exit_code, stdout, stderr)");
#endif
}
