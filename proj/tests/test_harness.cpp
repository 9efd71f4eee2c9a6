#include "doctest.h"

#include "reludeep/exactrep.hpp"
#include "reludeep/harness.hpp"
#include "reludeep/narrowing.hpp"

#include <atomic>
#include <sstream>

using namespace reludeep;

namespace {

Scalar q(long p, long r) { return Scalar(mpz_class(p), mpz_class(r)); }

CompileConfig cfg_for(std::size_t d, std::size_t n, std::size_t L) {
    CompileConfig cfg;
    cfg.d = d;
    cfg.n = n;
    cfg.L = L;
    return cfg;
}

bool has_line(const std::string& text, const std::string& line) {
    return text.find(line + "\n") != std::string::npos;
}

}  // namespace

TEST_CASE("generate_target") {
    Network a = generate_target(2, 3, 3, Scalar(1), 42);
    Network b = generate_target(2, 3, 3, Scalar(1), 42);
    CHECK(serialize(a) == serialize(b));
    CHECK(serialize(a) != serialize(generate_target(2, 3, 3, Scalar(1), 43)));
    NetStats s = stats(a);
    CHECK(s.width == 3);
    CHECK(s.depth == 3);
    CHECK(a.input_dim() == 2);
    CHECK(a.output_dim() == 1);
    for (Scalar B : {Scalar(1), q(3, 4), Scalar(5)}) {
        Network t = generate_target(3, 4, 4, B, 7, 6);
        for (uint64_t i = 0; i < t.depth(); ++i) {
            for (const auto& w : t.layer(i).weights()) {
                CHECK(w.abs() <= B);
                CHECK((w * Scalar::pow2(6)).is_integer());
            }
            for (const auto& v : t.layer(i).bias()) CHECK(v.abs() <= B);
        }
    }
    CHECK_THROWS_AS(generate_target(3, 2, 2, Scalar(1), 1), PreconditionError);
    CHECK_THROWS_AS(generate_target(1, 2, 1, Scalar(1), 1), PreconditionError);
}

TEST_CASE("samplers") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        mpz_class u = uniform_below(rng, mpz_class(7));
        CHECK(u >= 0);
        CHECK(u < 7);
        auto x = sample_box(rng, 3, q(3, 2), 10);
        for (const auto& v : x) {
            CHECK(v.abs() <= q(3, 2));
            CHECK((v * Scalar::pow2(10) / Scalar(3)).is_integer());
        }
        auto g = sample_good_point(rng, 2, Scalar(2), 3, q(3, 2));
        for (const auto& v : g) {
            CHECK(v.abs() <= q(3, 2));
            // midpoints of the 2^3 cells of [-2, 2]
            Scalar k = (v + Scalar(2)) * Scalar(4);
            CHECK(k.is_integer());
            CHECK(k.floor() % 2 != 0);
        }
        for (const auto& v : sample_wide_point(rng, 2)) CHECK(v.abs() <= Scalar(1000000));
    }
    std::mt19937_64 r1(9), r2(9);
    CHECK(sample_wide_point(r1, 4) == sample_wide_point(r2, 4));
}

TEST_CASE("parallel_for covers every index once") {
    for (unsigned workers : {0u, 1u, 3u}) {
        std::vector<std::atomic<int>> hits(101);
        parallel_for(101, workers, [&](uint64_t i) { hits[i]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS(parallel_for(5, 2, [](uint64_t i) {
        if (i == 3) throw std::runtime_error("boom");
    }));
}

TEST_CASE("verify modes on compiled networks") {
    CompileConfig cfg = cfg_for(1, 2, 2);
    Network t = generate_target(1, 2, 2, Scalar(1), 11);
    Network narrow = compile_narrow(t, cfg);

    VerificationReport g = verify(t, narrow, cfg, 60, 1, VerifyMode::GoodSet);
    CHECK(g.pass);
    CHECK(g.failures == 0);
    CHECK(g.max_error <= cfg.eps);
    CHECK(g.error_bound_ok);
    REQUIRE(g.bounds.size() == 1);
    CHECK(g.bounds[0].name == "width");

    VerificationReport s = verify(t, narrow, cfg, 100, 1, VerifyMode::Sampled);
    CHECK(s.pass);
    CHECK(s.failure_threshold == doctest::Approx(1.0 / 16 + 3 * std::sqrt((1.0 / 16) * (15.0 / 16) / 100)));

    Network exact = exact_deep(t);
    VerificationReport e = verify(t, exact, cfg, 50, 1, VerifyMode::Exact);
    CHECK(e.pass);
    CHECK(e.failure_fraction == 0);
    CHECK(e.max_error.is_zero());
    CHECK(e.bounds.size() == 2);

    // a wrong network fails in exact mode
    Network shifted(1);
    for (uint64_t i = 0; i + 1 < t.depth(); ++i) shifted.push(t.layer(i));
    const Layer& last = t.layer(t.depth() - 1);
    std::vector<Scalar> b = last.bias();
    b[0] += q(1, 1024);
    shifted.push(Layer(last.rows(), last.cols(), last.weights(), b, Activation::Identity));
    shifted.set_provenance(Provenance::CompiledExact);
    VerificationReport bad = verify(t, shifted, cfg, 20, 1, VerifyMode::Exact);
    CHECK_FALSE(bad.pass);
    CHECK(bad.failures == 20);
    CHECK(bad.max_error_all == q(1, 1024));
    CHECK(bad.max_error.is_zero());
}

TEST_CASE("verify is deterministic and the report is key-value text") {
    CompileConfig cfg = cfg_for(1, 2, 2);
    Network t = generate_target(1, 2, 2, Scalar(1), 4);
    Network c = compile_narrow(t, cfg);
    std::string r1 = report_text(verify(t, c, cfg, 40, 5, VerifyMode::GoodSet, 1));
    std::string r2 = report_text(verify(t, c, cfg, 40, 5, VerifyMode::GoodSet, 2));
    CHECK(r1 == r2);
    CHECK(has_line(r1, "mode = goodset"));
    CHECK(has_line(r1, "seed = 5"));
    CHECK(has_line(r1, "samples = 40"));
    CHECK(has_line(r1, "compiled_kind = compiled-narrow"));
    CHECK(has_line(r1, "verdict = pass"));
    CHECK(r1.find("bound.width = ") != std::string::npos);
    std::istringstream is(r1);
    for (std::string line; std::getline(is, line);) CHECK(line.find(" = ") != std::string::npos);

    cfg.backend = Backend::Float;
    std::string rf = report_text(verify(t, c, cfg, 10, 5, VerifyMode::GoodSet));
    CHECK(has_line(rf, "float.note = advisory only, not part of the verdict"));
}

TEST_CASE("verify rejects mismatched networks") {
    CompileConfig cfg = cfg_for(2, 2, 2);
    CHECK_THROWS_AS(verify(generate_target(1, 2, 2, Scalar(1), 1), generate_target(2, 2, 2, Scalar(1), 1), cfg, 10,
                           1, VerifyMode::Exact),
                    PreconditionError);
}

TEST_CASE("config parsing") {
    auto kv = parse_config_text("# comment\nd = 2\n n=3 \n\neps = 1/8  # trailing\ndist = beta\n");
    CHECK(kv.size() == 4);
    CHECK(kv.at("d") == "2");
    CHECK(kv.at("n") == "3");
    CHECK(kv.at("eps") == "1/8");
    CHECK_THROWS_AS(parse_config_text("d = 1\nd = 2\n"), PreconditionError);
    CHECK_THROWS_AS(parse_config_text("no equals sign\n"), PreconditionError);

    CompileConfig cfg;
    for (const auto& [k, v] : kv) apply_config_value(cfg, k, v);
    CHECK(cfg.d == 2);
    CHECK(cfg.n == 3);
    CHECK(cfg.eps == q(1, 8));
    CHECK(cfg.dist == Distribution::BetaBounded);
    apply_config_value(cfg, "depth-ceiling", "500");
    CHECK(cfg.depth_ceiling == 500);
    apply_config_value(cfg, "backend", "float");
    CHECK(cfg.backend == Backend::Float);
    CHECK_THROWS_AS(apply_config_value(cfg, "colour", "red"), PreconditionError);
    CHECK_THROWS_AS(apply_config_value(cfg, "d", "two"), PreconditionError);
}

TEST_CASE("config validation") {
    CompileConfig ok = cfg_for(2, 3, 2);
    CHECK_NOTHROW(ok.validate());
    CompileConfig wide = cfg_for(4, 3, 2);
    CHECK_THROWS_AS(wide.validate(), PreconditionError);
    CompileConfig bad = ok;
    bad.delta = Scalar(1);
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = ok;
    bad.eps = Scalar();
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = ok;
    bad.L = 1;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
}
