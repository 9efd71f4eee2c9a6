#include "reludeep/config.hpp"

#include <sstream>

namespace reludeep {

void CompileConfig::validate() const {
    if (d == 0 || n == 0) throw PreconditionError("d and n must be positive");
    if (L < 2) throw PreconditionError("L must be at least 2");
    if (d > n) throw PreconditionError("d > n violates the standing assumption d <= n");
    if (A < Scalar(1)) throw PreconditionError("A must be at least 1");
    if (B < Scalar(1)) throw PreconditionError("B must be at least 1");
    if (eps.sign() <= 0) throw PreconditionError("eps must be positive");
    if (delta.sign() <= 0 || delta >= Scalar(1)) throw PreconditionError("delta must lie in (0, 1)");
    if (beta.sign() <= 0) throw PreconditionError("beta must be positive");
    if (depth_ceiling == 0) throw PreconditionError("depth ceiling must be positive");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(is, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw PreconditionError("config line " + std::to_string(no) + ": expected key = value");
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key.empty()) throw PreconditionError("config line " + std::to_string(no) + ": empty key");
        if (kv.count(key)) throw PreconditionError("config line " + std::to_string(no) + ": duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

namespace {

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        if (v.empty() || v[0] == '-') throw std::invalid_argument("negative");
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw PreconditionError("bad value for " + key + ": '" + v + "'");
    }
}

Scalar parse_scalar(const std::string& key, const std::string& v) {
    try {
        return Scalar::parse(v);
    } catch (const std::exception&) {
        throw PreconditionError("bad value for " + key + ": '" + v + "'");
    }
}

}  // namespace

void apply_config_value(CompileConfig& cfg, const std::string& key, const std::string& v) {
    if (key == "d") cfg.d = parse_u64(key, v);
    else if (key == "n") cfg.n = parse_u64(key, v);
    else if (key == "L") cfg.L = parse_u64(key, v);
    else if (key == "A") cfg.A = parse_scalar(key, v);
    else if (key == "B") cfg.B = parse_scalar(key, v);
    else if (key == "eps") cfg.eps = parse_scalar(key, v);
    else if (key == "delta") cfg.delta = parse_scalar(key, v);
    else if (key == "beta") {
        cfg.beta = parse_scalar(key, v);
        cfg.dist = Distribution::BetaBounded;
    } else if (key == "dist") {
        if (v == "uniform") cfg.dist = Distribution::Uniform;
        else if (v == "beta") cfg.dist = Distribution::BetaBounded;
        else throw PreconditionError("dist must be uniform or beta");
    } else if (key == "seed") cfg.seed = parse_u64(key, v);
    else if (key == "backend") {
        if (v == "exact") cfg.backend = Backend::Exact;
        else if (v == "float") cfg.backend = Backend::Float;
        else throw PreconditionError("backend must be exact or float");
    } else if (key == "depth-ceiling") cfg.depth_ceiling = parse_u64(key, v);
    else if (key == "optimize") {
        if (v == "true" || v == "1") cfg.optimize = true;
        else if (v == "false" || v == "0") cfg.optimize = false;
        else throw PreconditionError("optimize must be true or false");
    } else throw PreconditionError("unknown config key '" + key + "'");
}

Scalar pow2_ceil(const Scalar& x) { return Scalar::pow2(ceil_log2(x)); }

Scalar pow2_floor(const Scalar& x) {
    if (x.sign() <= 0) throw std::domain_error("pow2_floor of non-positive value");
    return Scalar::pow2(x.floor_log2_abs());
}

namespace {

Scalar power(const Scalar& x, uint64_t k) {
    Scalar r(1);
    for (uint64_t i = 0; i < k; ++i) r *= x;
    return r;
}

}  // namespace

BitBudget bit_budget(const CompileConfig& cfg) {
    cfg.validate();
    Scalar A = pow2_ceil(cfg.A), B = pow2_ceil(cfg.B);
    Scalar nd(static_cast<long>(cfg.n * cfg.d));
    Scalar ratio = Scalar(5) * A * B * nd / cfg.eps;
    BitBudget bb;
    bb.c0 = ceil_log2(power(ratio, 2 * cfg.L));
    bb.c = 2 * bb.c0 + ceil_log2(Scalar(2) * A * Scalar(static_cast<long>(cfg.d))) +
           ceil_log2(power(Scalar(static_cast<long>(cfg.n + 1)) * B, cfg.L));
    if (bb.c < bb.c0 + A.floor_log2_abs() + 1)
        throw PreconditionError("block size c below c0 + log2(A) + 1");
    return bb;
}

Derived derive(const CompileConfig& cfg) { return derive(cfg, bit_budget(cfg)); }

Derived derive(const CompileConfig& cfg, const BitBudget& bits) {
    cfg.validate();
    if (bits.c0 < 1 || bits.c <= bits.c0) throw PreconditionError("bit budget needs 1 <= c0 < c");
    Derived dv;
    dv.bits = bits;
    dv.A = pow2_ceil(cfg.A);
    dv.B = pow2_ceil(cfg.B);
    Scalar two_a = Scalar(2) * dv.A;
    Scalar internal;
    if (cfg.dist == Distribution::BetaBounded) {
        internal = cfg.delta / (cfg.beta * power(two_a, cfg.d));
    } else {
        internal = cfg.delta * power(cfg.A / dv.A, cfg.d);
    }
    if (internal > Scalar::pow2(-1)) internal = Scalar::pow2(-1);
    dv.delta_eff = pow2_floor(internal);
    Scalar d(static_cast<long>(cfg.d));
    dv.delta_parallel = pow2_floor(dv.delta_eff / d);
    Scalar seq = pow2_floor(dv.delta_eff / (Scalar(static_cast<long>(cfg.d + 1)) * Scalar(dv.bits.c0)));
    Scalar cap = Scalar::pow2(-2 * dv.bits.c0 - 2);
    dv.delta_seq = seq < cap ? seq : cap;
    return dv;
}

void check_target(const Network& target, const CompileConfig& cfg) {
    cfg.validate();
    target.validate();
    if (target.input_dim() != cfg.d)
        throw PreconditionError("target has input dimension " + std::to_string(target.input_dim()) +
                                ", config says d = " + std::to_string(cfg.d));
    if (target.depth() != cfg.L)
        throw PreconditionError("target has depth " + std::to_string(target.depth()) + ", config says L = " +
                                std::to_string(cfg.L));
    for (uint64_t i = 0; i + 1 < target.depth(); ++i)
        if (target.layer(i).rows() > cfg.n)
            throw PreconditionError("hidden layer " + std::to_string(i + 1) + " has width " +
                                    std::to_string(target.layer(i).rows()) + " > n = " + std::to_string(cfg.n));
    for (uint64_t i = 0; i < target.depth(); ++i) {
        const Layer& l = target.layer(i);
        for (const auto& v : l.weights())
            if (v.abs() > cfg.B)
                throw PreconditionError("layer " + std::to_string(i + 1) + " has weight " + v.str() +
                                        " outside [-B, B]");
        for (const auto& v : l.bias())
            if (v.abs() > cfg.B)
                throw PreconditionError("layer " + std::to_string(i + 1) + " has bias " + v.str() +
                                        " outside [-B, B]");
    }
}

CompileConfig config_for_target(const Network& target) {
    CompileConfig cfg;
    cfg.d = target.input_dim();
    cfg.L = target.depth();
    cfg.n = 1;
    Scalar wmax(1);
    for (uint64_t i = 0; i < target.depth(); ++i) {
        const Layer& l = target.layer(i);
        if (i + 1 < target.depth()) cfg.n = std::max<uint64_t>(cfg.n, l.rows());
        for (const auto& v : l.weights()) wmax = std::max(wmax, v.abs());
        for (const auto& v : l.bias()) wmax = std::max(wmax, v.abs());
    }
    cfg.B = wmax;
    return cfg;
}

}  // namespace reludeep
