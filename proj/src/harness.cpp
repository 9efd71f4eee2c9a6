#include "reludeep/harness.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace reludeep {

mpz_class uniform_below(std::mt19937_64& rng, const mpz_class& bound) {
    if (bound <= 0) throw std::invalid_argument("uniform_below needs a positive bound");
    if (bound == 1) return 0;
    mpz_class top = bound - 1;
    std::size_t bits = mpz_sizeinbase(top.get_mpz_t(), 2);
    for (;;) {
        mpz_class r = 0;
        for (std::size_t got = 0; got < bits; got += 64) {
            mpz_mul_2exp(r.get_mpz_t(), r.get_mpz_t(), 64);
            uint64_t w = rng();
            mpz_class part;
            mpz_import(part.get_mpz_t(), 1, 1, sizeof(w), 0, 0, &w);
            r += part;
        }
        mpz_fdiv_r_2exp(r.get_mpz_t(), r.get_mpz_t(), bits);
        if (r < bound) return r;
    }
}

namespace {

int64_t uniform_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {
    mpz_class span = mpz_class(std::to_string(hi)) - mpz_class(std::to_string(lo)) + 1;
    mpz_class r = uniform_below(rng, span);
    return lo + static_cast<int64_t>(r.get_si());
}

}  // namespace

Network generate_target(std::size_t d, std::size_t n, std::size_t L, const Scalar& B, uint64_t seed,
                        unsigned precision_bits) {
    if (d == 0 || n == 0) throw PreconditionError("d and n must be positive");
    if (d > n) throw PreconditionError("d > n violates the standing assumption d <= n");
    if (L < 2) throw PreconditionError("generated targets need L >= 2");
    if (B.sign() <= 0) throw PreconditionError("B must be positive");
    std::mt19937_64 rng(seed);
    Scalar scaled = B;
    scaled.shift(precision_bits);
    mpz_class K = scaled.floor();
    const Scalar unit = Scalar::pow2(-static_cast<int64_t>(precision_bits));
    auto draw = [&]() {
        mpz_class k = uniform_below(rng, 2 * K + 1) - K;
        return Scalar(k) * unit;
    };
    Network net(d, "target-d" + std::to_string(d) + "-n" + std::to_string(n) + "-L" + std::to_string(L) + "-s" +
                       std::to_string(seed),
                Provenance::Target);
    std::size_t cols = d;
    for (std::size_t l = 0; l < L; ++l) {
        const bool last = l + 1 == L;
        std::size_t rows = last ? 1 : n;
        std::vector<Scalar> w(rows * cols), b(rows);
        for (auto& v : w) v = draw();
        for (auto& v : b) v = draw();
        net.push(Layer(rows, cols, std::move(w), std::move(b), last ? Activation::Identity : Activation::ReLU));
        cols = rows;
    }
    return net;
}

std::vector<Scalar> sample_box(std::mt19937_64& rng, std::size_t d, const Scalar& A, int64_t bits) {
    mpz_class range = 1;
    mpz_mul_2exp(range.get_mpz_t(), range.get_mpz_t(), static_cast<mp_bitcnt_t>(bits));
    std::vector<Scalar> x;
    for (std::size_t i = 0; i < d; ++i) {
        Scalar u(uniform_below(rng, range));
        u.shift(-bits);
        x.push_back(Scalar(2) * A * u - A);
    }
    return x;
}

std::vector<Scalar> sample_good_point(std::mt19937_64& rng, std::size_t d, const Scalar& A, int64_t c0,
                                      const Scalar& limit) {
    mpz_class cells = 1;
    mpz_mul_2exp(cells.get_mpz_t(), cells.get_mpz_t(), static_cast<mp_bitcnt_t>(c0));
    std::vector<Scalar> x;
    for (std::size_t i = 0; i < d; ++i) {
        for (;;) {
            Scalar v{mpz_class(2 * uniform_below(rng, cells) + 1)};
            v.shift(-c0 - 1);
            v = Scalar(2) * A * v - A;
            if (v.abs() <= limit) {
                x.push_back(v);
                break;
            }
        }
    }
    return x;
}

std::vector<Scalar> sample_wide_point(std::mt19937_64& rng, std::size_t d) {
    std::vector<Scalar> x;
    for (std::size_t i = 0; i < d; ++i) {
        switch (rng() % 3) {
            case 0: {
                Scalar u(uniform_int(rng, -(int64_t(1) << 20), int64_t(1) << 20));
                u.shift(-20);
                x.push_back(u);
                break;
            }
            case 1:
                x.push_back(Scalar(mpz_class(std::to_string(uniform_int(rng, -10000, 10000))),
                                   mpz_class(std::to_string(uniform_int(rng, 1, 1000)))));
                break;
            default: {
                Scalar big(uniform_int(rng, -1000000, 1000000));
                big += Scalar(mpz_class(std::to_string(uniform_int(rng, 0, 996))), mpz_class(997));
                x.push_back(big);
                break;
            }
        }
    }
    return x;
}

std::string to_string(VerifyMode m) {
    switch (m) {
        case VerifyMode::Sampled: return "sampled";
        case VerifyMode::GoodSet: return "goodset";
        case VerifyMode::Exact: return "exact";
    }
    return "?";
}

VerifyMode verify_mode_from_string(const std::string& s) {
    if (s == "sampled") return VerifyMode::Sampled;
    if (s == "goodset") return VerifyMode::GoodSet;
    if (s == "exact") return VerifyMode::Exact;
    throw PreconditionError("verify mode must be sampled, goodset or exact");
}

void parallel_for(uint64_t n, unsigned workers, const std::function<void(uint64_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers <= 1 || n <= 1) {
        for (uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<uint64_t>(workers, n));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (uint64_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

std::string mpz_pow_str(uint64_t base, uint64_t e) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), base, e);
    return r.get_str();
}

void structural_bounds(VerificationReport& r, const Network& target, const Network& compiled) {
    const auto d = compiled.input_dim();
    const auto& cs = r.compiled_stats;
    auto add = [&](std::string name, const std::string& measured, const std::string& bound, bool pass) {
        r.bounds.push_back({std::move(name), measured, bound, pass});
    };
    switch (compiled.provenance()) {
        case Provenance::CompiledNarrow: {
            std::size_t b = std::max<std::size_t>(5 * d, 10);
            add("width", std::to_string(cs.width), std::to_string(b), cs.width <= b);
            break;
        }
        case Provenance::CompiledMinwidth: {
            std::size_t b = std::max<std::size_t>(d + 2, 10);
            add("width", std::to_string(cs.width), std::to_string(b), cs.width <= b);
            break;
        }
        case Provenance::CompiledExact: {
            uint64_t L = target.depth();
            std::size_t n = 1;
            for (uint64_t l = 0; l + 1 < L; ++l) n = std::max(n, target.layer(l).rows());
            std::size_t wb = 2 * (d + L - 1);
            add("width", std::to_string(cs.width), std::to_string(wb), cs.width <= wb);
            mpz_class db = mpz_class(mpz_pow_str(2 * n, L - 1)) + 2;
            add("depth", std::to_string(cs.depth), db.get_str(), mpz_class(std::to_string(cs.depth)) <= db);
            break;
        }
        case Provenance::CompiledBounded:
            add("max_abs_weight", cs.max_abs_weight.str(), "2", cs.max_abs_weight <= Scalar(2));
            break;
        case Provenance::Target:
            break;
    }
}

}  // namespace

VerificationReport verify(const Network& target, const Network& compiled, const CompileConfig& cfg,
                          uint64_t n_samples, uint64_t seed, VerifyMode mode, unsigned workers) {
    target.validate();
    compiled.validate();
    if (target.input_dim() != compiled.input_dim())
        throw PreconditionError("target and compiled networks have different input dimensions");
    if (target.output_dim() != compiled.output_dim())
        throw PreconditionError("target and compiled networks have different output dimensions");
    if (n_samples == 0) throw PreconditionError("need at least one sample");
    VerificationReport r;
    r.mode = mode;
    r.seed = seed;
    r.compiled_kind = to_string(compiled.provenance());
    r.samples = n_samples;
    r.target_stats = stats(target);
    r.compiled_stats = stats(compiled);

    const std::size_t d = target.input_dim();
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Scalar>> points;
    points.reserve(n_samples);
    BitBudget bits;
    if (mode != VerifyMode::Exact) bits = bit_budget(cfg);
    const Scalar Ap = pow2_ceil(cfg.A);
    for (uint64_t i = 0; i < n_samples; ++i) {
        switch (mode) {
            case VerifyMode::Sampled: points.push_back(sample_box(rng, d, cfg.A, bits.c0 + 16)); break;
            case VerifyMode::GoodSet: points.push_back(sample_good_point(rng, d, Ap, bits.c0, cfg.A)); break;
            case VerifyMode::Exact: points.push_back(sample_wide_point(rng, d)); break;
        }
    }

    std::vector<Scalar> err(n_samples);
    std::vector<double> ferr(n_samples, 0.0);
    std::vector<char> funsafe(n_samples, 0), fover(n_samples, 0);
    const bool use_float = cfg.backend == Backend::Float;
    parallel_for(n_samples, workers, [&](uint64_t i) {
        auto yt = evaluate(target, points[i]);
        auto yc = evaluate(compiled, points[i]);
        Scalar e;
        for (std::size_t k = 0; k < yt.size(); ++k) {
            Scalar diff = (yc[k] - yt[k]).abs();
            if (diff > e) e = diff;
        }
        err[i] = e;
        if (use_float) {
            std::vector<double> xf;
            for (const auto& v : points[i]) xf.push_back(v.to_double());
            FloatResult fr = evaluate_float(compiled, xf);
            double m = 0;
            for (std::size_t k = 0; k < yt.size(); ++k) m = std::max(m, std::fabs(fr.y[k] - yt[k].to_double()));
            ferr[i] = m;
            funsafe[i] = fr.precision_unsafe;
            fover[i] = fr.overflow;
        }
    });

    Scalar bound_sq;
    if (mode == VerifyMode::GoodSet) {
        std::size_t n = 1;
        for (uint64_t l = 0; l + 1 < target.depth(); ++l) n = std::max(n, target.layer(l).rows());
        Scalar base = Scalar(5) * Scalar(static_cast<long>(n)) * pow2_ceil(cfg.B);
        Scalar b(1);
        for (uint64_t l = 0; l < target.depth(); ++l) b *= base;
        b *= Ap;
        b.shift(-bits.c0);
        bound_sq = b * b * Scalar(static_cast<long>(d));
        std::ostringstream os;
        os << "(5*" << n << "*" << pow2_ceil(cfg.B).str() << ")^" << target.depth() << "*" << Ap.str() << "*sqrt("
           << d << ")/2^" << bits.c0 << " ~ " << std::sqrt(bound_sq.to_double());
        r.error_bound = os.str();
    }

    for (uint64_t i = 0; i < n_samples; ++i) {
        bool fail = mode == VerifyMode::Exact ? !err[i].is_zero() : err[i] > cfg.eps;
        if (fail)
            ++r.failures;
        else if (err[i] > r.max_error)
            r.max_error = err[i];
        if (err[i] > r.max_error_all) r.max_error_all = err[i];
        if (mode == VerifyMode::GoodSet && err[i] * err[i] > bound_sq) r.error_bound_ok = false;
        if (use_float) {
            r.float_max_error = std::max(r.float_max_error, ferr[i]);
            r.float_precision_unsafe = r.float_precision_unsafe || funsafe[i];
            r.float_overflow = r.float_overflow || fover[i];
        }
    }
    r.float_run = use_float;
    r.failure_fraction = static_cast<double>(r.failures) / static_cast<double>(n_samples);
    if (mode == VerifyMode::Sampled) {
        double delta = cfg.delta.to_double();
        r.failure_threshold = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(n_samples));
        r.failure_ok = r.failure_fraction <= r.failure_threshold;
    } else {
        r.failure_threshold = 0;
        r.failure_ok = r.failures == 0;
    }
    structural_bounds(r, target, compiled);
    r.pass = r.failure_ok && r.error_bound_ok;
    for (const auto& b : r.bounds) r.pass = r.pass && b.pass;
    return r;
}

std::string report_text(const VerificationReport& r) {
    std::ostringstream os;
    auto stats_lines = [&](const std::string& prefix, const NetStats& s) {
        os << prefix << ".width = " << s.width << "\n";
        os << prefix << ".depth = " << s.depth << "\n";
        os << prefix << ".params = " << s.params << "\n";
        os << prefix << ".max_abs_weight = " << s.max_abs_weight.str() << "\n";
        os << prefix << ".max_bits = " << s.max_bits << "\n";
    };
    os << "mode = " << to_string(r.mode) << "\n";
    os << "seed = " << r.seed << "\n";
    os << "compiled_kind = " << r.compiled_kind << "\n";
    os << "samples = " << r.samples << "\n";
    os << "failures = " << r.failures << "\n";
    os << "failure_fraction = " << r.failure_fraction << "\n";
    os << "failure_threshold = " << r.failure_threshold << "\n";
    os << "failure_ok = " << (r.failure_ok ? "pass" : "fail") << "\n";
    os << "max_error = " << r.max_error.str() << "\n";
    os << "max_error_approx = " << r.max_error.to_double() << "\n";
    os << "max_error_all_approx = " << r.max_error_all.to_double() << "\n";
    if (r.mode == VerifyMode::GoodSet) {
        os << "error_bound = " << r.error_bound << "\n";
        os << "error_bound_ok = " << (r.error_bound_ok ? "pass" : "fail") << "\n";
    }
    stats_lines("target", r.target_stats);
    stats_lines("compiled", r.compiled_stats);
    for (const auto& b : r.bounds)
        os << "bound." << b.name << " = " << b.measured << " <= " << b.bound << " " << (b.pass ? "pass" : "fail")
           << "\n";
    if (r.float_run) {
        os << "float.max_error = " << r.float_max_error << "\n";
        os << "float.precision_unsafe = " << (r.float_precision_unsafe ? "yes" : "no") << "\n";
        os << "float.overflow = " << (r.float_overflow ? "yes" : "no") << "\n";
        os << "float.note = advisory only, not part of the verdict\n";
    }
    os << "verdict = " << (r.pass ? "pass" : "fail") << "\n";
    return os.str();
}

}  // namespace reludeep
