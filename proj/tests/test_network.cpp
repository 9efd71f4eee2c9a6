#include "doctest.h"

#include "reludeep/gadgets.hpp"
#include "reludeep/harness.hpp"
#include "reludeep/network.hpp"

#include <random>

using namespace reludeep;

namespace {

Scalar q(long p, long r) { return Scalar(mpz_class(p), mpz_class(r)); }

Network identity_net() {
    Network n(1);
    n.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::Identity));
    return n;
}

// small-integer weights, so doubles are exact up to rounding in the last layer
Network random_net(std::size_t d, std::size_t n, std::size_t L, uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto draw = [&] { return q(static_cast<long>(rng() % 2001) - 1000, 256); };
    Network net(d);
    std::size_t cols = d;
    for (std::size_t l = 0; l < L; ++l) {
        bool last = l + 1 == L;
        std::size_t rows = last ? 2 : n;
        std::vector<Scalar> w(rows * cols), b(rows);
        for (auto& v : w) v = draw();
        for (auto& v : b) v = draw();
        net.push(Layer(rows, cols, w, b, last ? Activation::Identity : Activation::ReLU));
        cols = rows;
    }
    return net;
}

double l2(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = (a[i] - b[i]).to_double();
        s += t * t;
    }
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("evaluate examples") {
    CHECK(evaluate(identity_net(), {Scalar(-3)}) == std::vector<Scalar>{Scalar(-3)});

    Network r(1);
    r.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::ReLU));
    r.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::Identity));
    CHECK(evaluate(r, {Scalar(-3)}) == std::vector<Scalar>{Scalar()});

    Network z(1);
    z.push(Layer(2, 1, {Scalar(1), Scalar(-1)}, {Scalar(), Scalar()}, Activation::ReLU));
    z.push(Layer(1, 2, {Scalar(1), Scalar(-1)}, {Scalar()}, Activation::Identity));
    CHECK(evaluate(z, {q(5, 7)}) == std::vector<Scalar>{q(5, 7)});
    CHECK(evaluate(z, {q(-5, 7)}) == std::vector<Scalar>{q(-5, 7)});

    CHECK_THROWS_AS(evaluate(z, {Scalar(), Scalar()}), StructureError);
}

TEST_CASE("structure checks") {
    Network n(2);
    CHECK_THROWS_AS(n.push(Layer(1, 3, std::vector<Scalar>(3), {Scalar()}, Activation::Identity)), StructureError);
    CHECK_THROWS(Layer(2, 1, {Scalar(), Scalar()}, {Scalar()}, Activation::ReLU));
    Network bad(1);
    bad.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::Identity));
    bad.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::Identity));
    CHECK_THROWS_AS(bad.validate(), StructureError);
    Network relu_last(1);
    relu_last.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::ReLU));
    CHECK_THROWS_AS(relu_last.validate(), StructureError);
}

TEST_CASE("evaluate_float") {
    CHECK(evaluate_float(identity_net(), {2.0}).y.at(0) == 2.0);
    FloatResult t = evaluate_float(wrap(triangle()), {0.25});
    CHECK(t.y.at(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(t.precision_unsafe);

    Network big(1);
    big.push(Layer(1, 1, {Scalar::pow2(60) + Scalar(1)}, {Scalar()}, Activation::Identity));
    CHECK(evaluate_float(big, {1.0}).precision_unsafe);

    Network over(1);
    over.push(Layer(1, 1, {Scalar::pow2(1000)}, {Scalar()}, Activation::ReLU), 3);
    over.push(Layer(1, 1, {Scalar(1)}, {Scalar()}, Activation::Identity));
    CHECK(evaluate_float(over, {1.0}).overflow);
}

TEST_CASE("stats") {
    Network n(2);
    n.push(Layer(3, 2, std::vector<Scalar>(6, Scalar(1)), std::vector<Scalar>(3), Activation::ReLU));
    n.push(Layer(1, 3, {Scalar(1), q(-7, 3), Scalar(2)}, {Scalar()}, Activation::Identity));
    NetStats s = stats(n);
    CHECK(s.width == 3);
    CHECK(s.depth == 2);
    CHECK(s.params == 13);
    CHECK(s.max_abs_weight == q(7, 3));

    Network a(4);
    a.push(Layer(1, 4, std::vector<Scalar>(4, Scalar(1)), {Scalar()}, Activation::Identity));
    s = stats(a);
    CHECK(s.width == 4);
    CHECK(s.depth == 1);
    CHECK(s.params == 5);
}

TEST_CASE("repeated layers") {
    Network n(1);
    n.push(Layer(1, 1, {Scalar(2)}, {Scalar()}, Activation::ReLU), 5);
    n.push(Layer(1, 1, {Scalar(1)}, {Scalar(1)}, Activation::Identity));
    CHECK(n.depth() == 6);
    CHECK(n.runs().size() == 2);
    CHECK(evaluate(n, {q(3, 4)}).at(0) == Scalar(25));
    CHECK(evaluate(n, {q(-3, 4)}).at(0) == Scalar(1));
    CHECK(stats(n).params == 12);
    CHECK(evaluate_trace(n, {Scalar(1)}).size() == 6);
    CHECK(n.layer(4).w(0, 0) == Scalar(2));
    CHECK(deserialize(serialize(n)).runs().size() == 2);
}

TEST_CASE("serialization round trip") {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Network t = generate_target(2, 3, 3, Scalar(1), seed);
        Network back = deserialize(serialize(t));
        CHECK(serialize(back) == serialize(t));
        CHECK(stats(back).width == stats(t).width);
        CHECK(stats(back).depth == stats(t).depth);
        for (uint64_t i = 0; i < t.depth(); ++i) CHECK(back.layer(i) == t.layer(i));
    }
    Network third(1, "third", Provenance::CompiledExact);
    third.push(Layer(1, 1, {q(1, 3)}, {q(-2, 3)}, Activation::Identity));
    Network back = deserialize(serialize(third));
    CHECK(back.layer(0).w(0, 0) == q(1, 3));
    CHECK(back.name() == "third");
    CHECK(back.provenance() == Provenance::CompiledExact);
}

TEST_CASE("malformed files are rejected") {
    Network two = random_net(1, 2, 2, 1);
    std::string text = serialize(two);
    CHECK_THROWS_AS(deserialize(std::string("RELUNET v2\n") + text.substr(text.find('\n') + 1)), ParseError);
    CHECK_THROWS(deserialize(std::string("garbage")));
    // break the dimension chain: claim the output layer has 3 columns
    std::string broken = text;
    auto pos = broken.rfind("layer 2 2");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 9, "layer 2 3");
    CHECK_THROWS(deserialize(broken));
}

TEST_CASE("positive homogeneity of a hidden layer") {
    std::mt19937_64 rng(8);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Network t = random_net(2, 3, 3, seed);
        Scalar lambda = q(static_cast<long>(rng() % 50) + 1, static_cast<long>(rng() % 7) + 1);
        Network scaled(2);
        for (uint64_t i = 0; i < t.depth(); ++i) {
            const Layer& L = t.layer(i);
            if (i == 1) {
                std::vector<Scalar> w = L.weights(), b = L.bias();
                for (auto& v : w) v *= lambda;
                for (auto& v : b) v *= lambda;
                scaled.push(Layer(L.rows(), L.cols(), w, b, L.activation()));
            } else {
                scaled.push(L);
            }
        }
        std::vector<Scalar> x{q(static_cast<long>(rng() % 200) - 100, 17), q(static_cast<long>(rng() % 200) - 100, 9)};
        auto a = evaluate_trace(t, x), b = evaluate_trace(scaled, x);
        for (std::size_t j = 0; j < a[1].size(); ++j) REQUIRE(b[1][j] == lambda * a[1][j]);
    }
}

TEST_CASE("float and exact evaluation agree") {
    std::mt19937_64 rng(2);
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Network t = random_net(2, 4, 3, seed);
        for (int i = 0; i < 10; ++i) {
            std::vector<double> xf{static_cast<double>(static_cast<long>(rng() % 4096) - 2048) / 1024,
                                   static_cast<double>(static_cast<long>(rng() % 4096) - 2048) / 1024};
            std::vector<Scalar> x{Scalar::from_double(xf[0]), Scalar::from_double(xf[1])};
            auto ex = evaluate(t, x);
            auto fl = evaluate_float(t, xf);
            CHECK_FALSE(fl.precision_unsafe);
            for (std::size_t j = 0; j < ex.size(); ++j) REQUIRE(fl.y[j] == doctest::Approx(ex[j].to_double()).epsilon(1e-9));
        }
    }
}

TEST_CASE("Lipschitz bound under small perturbations") {
    std::mt19937_64 rng(5);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Network t = random_net(2, 3, 3, seed);
        double frob = 1;
        for (uint64_t i = 0; i < t.depth(); ++i) {
            double s = 0;
            for (const auto& w : t.layer(i).weights()) s += w.to_double() * w.to_double();
            frob *= std::sqrt(s);
        }
        for (int k = 0; k < 10; ++k) {
            std::vector<Scalar> x{q(static_cast<long>(rng() % 200) - 100, 13), q(static_cast<long>(rng() % 200) - 100, 11)};
            std::vector<Scalar> h{q(static_cast<long>(rng() % 21) - 10, 1 << 20), q(static_cast<long>(rng() % 21) - 10, 1 << 20)};
            std::vector<Scalar> xh{x[0] + h[0], x[1] + h[1]};
            std::vector<Scalar> zero(2);
            REQUIRE(l2(evaluate(t, x), evaluate(t, xh)) <= frob * l2(h, zero) * (1 + 1e-12));
        }
    }
}
