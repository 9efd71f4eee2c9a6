// reludeep: generate, compile, verify, inspect and evaluate ReLU networks.
// Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or precondition error.

#include "CLI11.hpp"

#include "reludeep/exactrep.hpp"
#include "reludeep/harness.hpp"
#include "reludeep/minwidth.hpp"
#include "reludeep/narrowing.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace reludeep;

namespace {

constexpr int kPass = 0, kVerdictFail = 1, kUsage = 2;

struct ConfigFlags {
    std::map<std::string, std::string> values;
    std::string config_path;
    bool optimize = false;

    void add(CLI::App* app) {
        for (const char* key : {"d", "n", "L", "A", "B", "eps", "delta", "beta", "dist", "seed", "backend",
                                "depth-ceiling"})
            app->add_option(std::string("--") + key, values[key], std::string("config key ") + key);
        app->add_flag("--optimize", optimize, "fuse affine maps at fragment seams");
        app->add_option("--config", config_path, "key = value config file; a key may not also be given as a flag")
            ->check(CLI::ExistingFile);
    }

    // Flags plus config file; a key in both is an error.
    std::map<std::string, std::string> merged(const CLI::App* app) const {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : values)
            if (app->count("--" + k) > 0) out[k] = v;
        if (optimize) out["optimize"] = "true";
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            for (const auto& [k, v] : parse_config_text(ss.str())) {
                if (out.count(k))
                    throw PreconditionError("key '" + k + "' is set both on the command line and in " + config_path);
                out[k] = v;
            }
        }
        return out;
    }
};

// Dimensions and weight bound read off the target unless given explicitly.
CompileConfig config_for(const Network& target, const std::map<std::string, std::string>& kv) {
    CompileConfig cfg = config_for_target(target);
    for (const auto& [k, v] : kv) apply_config_value(cfg, k, v);
    cfg.validate();
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string stats_text(const NetStats& s) {
    std::ostringstream os;
    os << "width = " << s.width << "\n";
    os << "depth = " << s.depth << "\n";
    os << "params = " << s.params << "\n";
    os << "max_abs_weight = " << s.max_abs_weight.str() << "\n";
    os << "max_bits = " << s.max_bits << "\n";
    return os.str();
}

std::vector<std::string> split_point(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rewrites wide shallow ReLU networks into narrow deep ones and checks the result."};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a random target network");
    ConfigFlags gen_flags;
    gen_flags.add(gen);
    unsigned precision = 4;
    std::string gen_out;
    gen->add_option("--precision", precision, "weights are k / 2^precision")->capture_default_str();
    gen->add_option("--out", gen_out, "output file (default stdout)");

    // compile
    auto* comp = app.add_subcommand("compile", "compile a target network");
    ConfigFlags comp_flags;
    comp_flags.add(comp);
    std::string comp_mode = "narrow", comp_in, comp_out;
    comp->add_option("--mode", comp_mode)
        ->check(CLI::IsMember({"narrow", "narrow-bounded", "minwidth", "exact"}))
        ->capture_default_str();
    comp->add_option("--in", comp_in, "target network")->required()->check(CLI::ExistingFile);
    comp->add_option("--out", comp_out, "output file (default stdout)");

    // verify
    auto* ver = app.add_subcommand("verify", "compare a compiled network against its target");
    ConfigFlags ver_flags;
    ver_flags.add(ver);
    std::string ver_mode = "goodset", ver_target, ver_in, ver_report;
    uint64_t samples = 400;
    unsigned workers = 0;
    ver->add_option("--mode", ver_mode)->check(CLI::IsMember({"sampled", "goodset", "exact"}))->capture_default_str();
    ver->add_option("--target", ver_target, "target network")->required()->check(CLI::ExistingFile);
    ver->add_option("--in", ver_in, "compiled network")->required()->check(CLI::ExistingFile);
    ver->add_option("--samples", samples)->capture_default_str();
    ver->add_option("--workers", workers, "0 = hardware concurrency")->capture_default_str();
    ver->add_option("--report", ver_report, "also write the report here");

    // stats
    auto* st = app.add_subcommand("stats", "print width, depth, parameter count and weight size");
    std::string st_in;
    st->add_option("--in", st_in)->required()->check(CLI::ExistingFile);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a network at a point");
    std::string ev_in, ev_x, ev_backend = "exact";
    ev->add_option("--in", ev_in)->required()->check(CLI::ExistingFile);
    ev->add_option("--x", ev_x, "comma-separated rationals, e.g. 1/3,-2")->required();
    ev->add_option("--backend", ev_backend)->check(CLI::IsMember({"exact", "float"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (gen->parsed()) {
            auto kv = gen_flags.merged(gen);
            for (const char* key : {"d", "n", "L"})
                if (!kv.count(key)) throw PreconditionError(std::string("generate needs --") + key);
            CompileConfig cfg;
            for (const auto& [k, v] : kv) apply_config_value(cfg, k, v);
            cfg.validate();
            Network t = generate_target(cfg.d, cfg.n, cfg.L, cfg.B, cfg.seed, precision);
            write_text(gen_out, serialize(t));
            return kPass;
        }
        if (comp->parsed()) {
            Network t = load_network(comp_in);
            CompileConfig cfg = config_for(t, comp_flags.merged(comp));
            Network out;
            if (comp_mode == "narrow")
                out = compile_narrow(t, cfg);
            else if (comp_mode == "narrow-bounded")
                out = bound_weights(compile_narrow(t, cfg));
            else if (comp_mode == "minwidth")
                out = compile_minwidth(t, cfg);
            else
                out = exact_deep(t, cfg.depth_ceiling);
            write_text(comp_out, serialize(out));
            return kPass;
        }
        if (ver->parsed()) {
            Network t = load_network(ver_target);
            Network c = load_network(ver_in);
            CompileConfig cfg = config_for(t, ver_flags.merged(ver));
            VerificationReport r = verify(t, c, cfg, samples, cfg.seed, verify_mode_from_string(ver_mode), workers);
            std::string text = report_text(r);
            std::cout << text;
            if (!ver_report.empty()) write_text(ver_report, text);
            return r.pass ? kPass : kVerdictFail;
        }
        if (st->parsed()) {
            std::cout << stats_text(stats(load_network(st_in)));
            return kPass;
        }
        if (ev->parsed()) {
            Network net = load_network(ev_in);
            auto parts = split_point(ev_x);
            if (ev_backend == "float") {
                std::vector<double> x;
                for (const auto& p : parts) x.push_back(Scalar::parse(p).to_double());
                FloatResult r = evaluate_float(net, x);
                for (std::size_t i = 0; i < r.y.size(); ++i) std::cout << "y" << i << " = " << r.y[i] << "\n";
                std::cout << "precision_unsafe = " << (r.precision_unsafe ? "yes" : "no") << "\n";
                std::cout << "overflow = " << (r.overflow ? "yes" : "no") << "\n";
            } else {
                std::vector<Scalar> x;
                for (const auto& p : parts) x.push_back(Scalar::parse(p));
                auto y = evaluate(net, x);
                for (std::size_t i = 0; i < y.size(); ++i) std::cout << "y" << i << " = " << y[i].str() << "\n";
            }
            return kPass;
        }
    } catch (const PreconditionError& e) {
        std::cerr << "precondition: " << e.what() << "\n";
        return kUsage;
    } catch (const StructureError& e) {
        std::cerr << "structure: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "parse: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
