#include "doctest.h"

#include "reludeep/config.hpp"
#include "reludeep/exactrep.hpp"
#include "reludeep/harness.hpp"

#include <random>

using namespace reludeep;

namespace {

Scalar q(long p, long r) { return Scalar(mpz_class(p), mpz_class(r)); }

// random rational weights p/r, |p| <= 9, 1 <= r <= 7
Network random_target(std::size_t d, std::size_t n, std::size_t L, uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto draw = [&] { return q(static_cast<long>(rng() % 19) - 9, static_cast<long>(rng() % 7) + 1); };
    Network net(d);
    std::size_t cols = d;
    for (std::size_t l = 0; l < L; ++l) {
        bool last = l + 1 == L;
        std::size_t rows = last ? 1 : n;
        std::vector<Scalar> w(rows * cols), b(rows);
        for (auto& v : w) v = draw();
        for (auto& v : b) v = draw();
        net.push(Layer(rows, cols, w, b, last ? Activation::Identity : Activation::ReLU));
        cols = rows;
    }
    return net;
}

}  // namespace

TEST_CASE("absolute value") {
    Network abs_net(1);
    abs_net.push(Layer(2, 1, {Scalar(1), Scalar(-1)}, {Scalar(), Scalar()}, Activation::ReLU));
    abs_net.push(Layer(1, 2, {Scalar(1), Scalar(1)}, {Scalar()}, Activation::Identity));
    Network e = exact_two_layer(abs_net);
    for (Scalar x : {Scalar(-2), q(-1, 3), Scalar(), q(1, 3), Scalar(2)}) CHECK(evaluate(e, {x}).at(0) == x.abs());
    NetStats s = stats(e);
    CHECK(s.width == 4);
    CHECK(s.depth == 4);
    CHECK(e.provenance() == Provenance::CompiledExact);
}

TEST_CASE("zero output weights give the output bias") {
    Network t(2);
    t.push(Layer(3, 2, std::vector<Scalar>(6, Scalar(3)), std::vector<Scalar>(3, Scalar(-1)), Activation::ReLU));
    t.push(Layer(1, 3, std::vector<Scalar>(3), {q(5, 7)}, Activation::Identity));
    Network e = exact_two_layer(t);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) CHECK(evaluate(e, sample_wide_point(rng, 2)).at(0) == q(5, 7));
    CHECK(stats(e).width == 6);
    CHECK(stats(e).depth == 5);
}

TEST_CASE("exact_two_layer rejects deeper targets") {
    CHECK_THROWS_AS(exact_two_layer(random_target(1, 2, 3, 1)), PreconditionError);
}

TEST_CASE("exact equality, width and depth bounds") {
    for (std::size_t d = 1; d <= 3; ++d)
        for (std::size_t n = 1; n <= 4; ++n)
            for (std::size_t L = 2; L <= 4; ++L) {
                if (d > n) continue;
                Network t = random_target(d, n, L, 100 * d + 10 * n + L);
                Network e = exact_deep(t);
                NetStats s = stats(e);
                CHECK(s.width <= 2 * (d + L - 1));
                CHECK(s.width == 2 * d + L);
                uint64_t pow = 1;
                for (std::size_t l = 1; l < L; ++l) pow *= 2 * n;
                CHECK(s.depth <= pow + 2);
                CHECK(s.depth == exact_depth(t));
                std::mt19937_64 rng(d + n + L);
                for (int i = 0; i < 25; ++i) {
                    auto x = sample_wide_point(rng, d);
                    REQUIRE(evaluate(e, x) == evaluate(t, x));
                }
                std::vector<Scalar> far(d, Scalar(-1000000));
                CHECK(evaluate(e, far) == evaluate(t, far));
                far.assign(d, Scalar(1000000));
                CHECK(evaluate(e, far) == evaluate(t, far));
            }
}

TEST_CASE("L = 3 example sizes") {
    Network t = random_target(1, 2, 3, 77);
    Network e = exact_deep(t);
    CHECK(stats(e).width <= 6);
    CHECK(stats(e).depth <= 18);
}

TEST_CASE("L = 2 goes through the same construction") {
    Network t = random_target(2, 3, 2, 5);
    CHECK(serialize(exact_deep(t)) == serialize(exact_two_layer(t)));
}

TEST_CASE("the first 2d wires carry relu(x) and relu(-x)") {
    Network t = random_target(2, 3, 3, 9);
    Network e = exact_deep(t);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        auto x = sample_wide_point(rng, 2);
        auto trace = evaluate_trace(e, x);
        for (std::size_t l = 0; l + 1 < trace.size(); ++l) {
            for (std::size_t j = 0; j < 2; ++j) {
                Scalar pos = x[j], neg = -x[j];
                pos.relu();
                neg.relu();
                REQUIRE(trace[l][j] == pos);
                REQUIRE(trace[l][2 + j] == neg);
            }
        }
    }
}

TEST_CASE("fresh accumulators start at zero") {
    // d = 1, L = 3: inner accumulator is wire 3 in every inner block, the inner block restarts after each outer neuron
    Network t = random_target(1, 3, 3, 12);
    Network e = exact_deep(t);
    std::mt19937_64 rng(2);
    auto x = sample_wide_point(rng, 1);
    auto trace = evaluate_trace(e, x);
    // block k (0-based) starts at layer 1 + k (n + 1); its first layer holds [relu x, relu -x, outer, inner = 0, t]
    for (std::size_t k = 0; k < 3; ++k) CHECK(trace[1 + k * 4][3] == Scalar());
}

TEST_CASE("depth ceiling") {
    Network t = random_target(1, 4, 4, 3);
    CHECK(exact_depth(t) == 4 * (4 * (4 + 1) + 1) + 2);
    CHECK_THROWS_AS(exact_deep(t, 50), PreconditionError);
    CHECK_NOTHROW(exact_deep(t, 100));
}

TEST_CASE("efficiency report") {
    Network t = random_target(1, 4, 2, 1);
    EfficiencyReport same = efficiency_report(t, t);
    CHECK(same.ratio == 1.0);
    CHECK(same.regime == "linear");
    double prev = 0;
    for (std::size_t n : {4, 8, 16, 32}) {
        Network tn = random_target(1, n, 2, n);
        EfficiencyReport r = efficiency_report(tn, exact_deep(tn));
        CHECK(r.ratio < 8);
        if (prev > 0) CHECK(r.ratio < prev * 1.2);
        prev = r.ratio;
    }
    CHECK(efficiency_report(random_target(1, 2, 3, 1), t).regime == "quadratic");
    CHECK(efficiency_report(random_target(1, 2, 4, 1), t).regime == "blow-up");
}
