#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reludeep/exactrep.hpp"
#include "reludeep/harness.hpp"
#include "reludeep/minwidth.hpp"
#include "reludeep/narrowing.hpp"

namespace py = pybind11;
using namespace reludeep;

namespace {

py::object fraction_type() { return py::module_::import("fractions").attr("Fraction"); }

py::object to_fraction(const Scalar& s) {
    return fraction_type()(py::int_(py::str(s.numerator().get_str())), py::int_(py::str(s.denominator().get_str())));
}

// int, Fraction, str ("p/q", "p/q*2^k") or float
Scalar to_scalar(const py::handle& h) {
    if (py::isinstance<py::float_>(h)) return Scalar::from_double(h.cast<double>());
    return Scalar::parse(py::str(h).cast<std::string>());
}

std::vector<Scalar> to_point(const py::sequence& xs) {
    std::vector<Scalar> x;
    for (const auto& h : xs) x.push_back(to_scalar(h));
    return x;
}

CompileConfig make_config(const Network& target, const py::dict& kw) {
    CompileConfig cfg = config_for_target(target);
    for (const auto& [k, v] : kw) {
        std::string key = py::str(k).cast<std::string>();
        for (auto& ch : key)
            if (ch == '_') ch = '-';
        std::string value = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false")
                                                          : py::str(v).cast<std::string>();
        apply_config_value(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

py::dict stats_dict(const NetStats& s) {
    py::dict d;
    d["width"] = s.width;
    d["depth"] = s.depth;
    d["params"] = s.params;
    d["max_abs_weight"] = to_fraction(s.max_abs_weight);
    d["max_bits"] = s.max_bits;
    return d;
}

}  // namespace

PYBIND11_MODULE(_reludeep, m) {
    m.doc() = "Exact ReLU network compilers: narrow, min-width, bounded-weight and exact rewrites.";

    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<StructureError>(m, "StructureError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<Network>(m, "Network")
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("depth", &Network::depth)
        .def_property_readonly("name", &Network::name)
        .def_property_readonly("provenance", [](const Network& n) { return to_string(n.provenance()); })
        .def("serialize", [](const Network& n) { return serialize(n); })
        .def_static("deserialize", [](const std::string& text) { return deserialize(text); })
        .def("save", [](const Network& n, const std::string& path) { save_network(n, path); })
        .def_static("load", &load_network)
        .def("stats", [](const Network& n) { return stats_dict(stats(n)); })
        .def(
            "evaluate",
            [](const Network& n, const py::sequence& x) {
                auto y = [&] {
                    std::vector<Scalar> pt = to_point(x);
                    py::gil_scoped_release release;
                    return evaluate(n, pt);
                }();
                py::list out;
                for (const auto& v : y) out.append(to_fraction(v));
                return out;
            },
            py::arg("x"), "exact forward pass; inputs may be int, Fraction, str or float")
        .def(
            "evaluate_float",
            [](const Network& n, const std::vector<double>& x) {
                FloatResult r = evaluate_float(n, x);
                py::dict d;
                d["y"] = r.y;
                d["precision_unsafe"] = r.precision_unsafe;
                d["overflow"] = r.overflow;
                return d;
            },
            py::arg("x"))
        .def("__repr__", [](const Network& n) {
            NetStats s = stats(n);
            return "<Network " + to_string(n.provenance()) + " d=" + std::to_string(n.input_dim()) +
                   " width=" + std::to_string(s.width) + " depth=" + std::to_string(s.depth) + ">";
        });

    m.def(
        "generate_target",
        [](std::size_t d, std::size_t n, std::size_t L, const py::object& B, uint64_t seed, unsigned precision_bits) {
            return generate_target(d, n, L, to_scalar(B), seed, precision_bits);
        },
        py::arg("d"), py::arg("n"), py::arg("L"), py::arg("B") = 1, py::arg("seed") = 1, py::arg("precision_bits") = 4);

    auto compiler = [&](const char* name, Network (*fn)(const Network&, const CompileConfig&), const char* doc) {
        m.def(
            name,
            [fn](const Network& t, const py::kwargs& kw) {
                CompileConfig cfg = make_config(t, kw);
                py::gil_scoped_release release;
                return fn(t, cfg);
            },
            py::arg("target"), doc);
    };
    compiler("compile_narrow", &compile_narrow, "width max{5d,10} approximation; config keys as keyword arguments");
    compiler("compile_minwidth", &compile_minwidth, "width max{d+2,10} approximation");
    m.def(
        "bound_weights", [](const Network& n) { return bound_weights(n); }, py::arg("net"),
        "same function with every weight in [-2, 2]");
    m.def(
        "exact_deep",
        [](const Network& t, uint64_t depth_ceiling) {
            py::gil_scoped_release release;
            return exact_deep(t, depth_ceiling);
        },
        py::arg("target"), py::arg("depth_ceiling") = 1000000, "exact rewrite of width 2d+L");
    m.def("exact_depth", &exact_depth, py::arg("target"));
    m.def(
        "efficiency_report",
        [](const Network& t, const Network& c) {
            EfficiencyReport r = efficiency_report(t, c);
            py::dict d;
            d["target_params"] = r.target_params;
            d["compiled_params"] = r.compiled_params;
            d["ratio"] = r.ratio;
            d["regime"] = r.regime;
            return d;
        },
        py::arg("target"), py::arg("compiled"));
    m.def(
        "verify",
        [](const Network& t, const Network& c, const std::string& mode, uint64_t samples, uint64_t seed,
           const py::kwargs& kw) {
            CompileConfig cfg = make_config(t, kw);
            VerifyMode vm = verify_mode_from_string(mode);
            VerificationReport r;
            {
                py::gil_scoped_release release;
                r = verify(t, c, cfg, samples, seed, vm);
            }
            py::dict d;
            d["mode"] = to_string(r.mode);
            d["samples"] = r.samples;
            d["failures"] = r.failures;
            d["failure_fraction"] = r.failure_fraction;
            d["failure_threshold"] = r.failure_threshold;
            d["max_error"] = to_fraction(r.max_error);
            d["error_bound_ok"] = r.error_bound_ok;
            d["target"] = stats_dict(r.target_stats);
            d["compiled"] = stats_dict(r.compiled_stats);
            py::dict bounds;
            for (const auto& b : r.bounds) bounds[py::str(b.name)] = b.pass;
            d["bounds"] = bounds;
            d["pass"] = r.pass;
            d["text"] = report_text(r);
            return d;
        },
        py::arg("target"), py::arg("compiled"), py::arg("mode") = "goodset", py::arg("samples") = 400,
        py::arg("seed") = 1);
}
