#include "doctest.h"

#include "reludeep/scalar.hpp"

#include <random>

using namespace reludeep;

namespace {

Scalar q(long p, long r) { return Scalar(mpz_class(p), mpz_class(r)); }

}  // namespace

TEST_CASE("lowest terms and sign") {
    Scalar a = q(6, -8);
    CHECK(a.numerator() == -3);
    CHECK(a.denominator() == 4);
    CHECK(a.sign() == -1);
    CHECK(q(0, 5).is_zero());
    CHECK(q(0, 5) == Scalar());
    CHECK(q(12, 4).is_integer());
    CHECK(q(3, 8).is_dyadic());
    CHECK_FALSE(q(1, 3).is_dyadic());
}

TEST_CASE("exact arithmetic") {
    CHECK(q(1, 3) + q(1, 6) == q(1, 2));
    CHECK(q(1, 3) - q(1, 2) == q(-1, 6));
    CHECK(q(2, 3) * q(9, 4) == q(3, 2));
    CHECK(q(2, 3) / q(4, 9) == q(3, 2));
    CHECK(q(1, 3) < q(1, 2));
    CHECK(q(-1, 3) > q(-1, 2));
    Scalar acc = Scalar(1);
    acc.add_product(q(1, 3), q(3, 5));
    CHECK(acc == q(6, 5));
    CHECK_THROWS(q(1, 3) / Scalar());
}

TEST_CASE("powers of two, floor, ceil") {
    CHECK(Scalar::pow2(-3) == q(1, 8));
    CHECK(Scalar::pow2(10) == Scalar(1024));
    Scalar big = Scalar::pow2(400) + q(1, 3);
    CHECK(big - Scalar::pow2(400) == q(1, 3));
    CHECK(q(-7, 2).floor() == -4);
    CHECK(q(-7, 2).ceil() == -3);
    CHECK(q(7, 2).floor() == 3);
    Scalar s = q(3, 5);
    s.shift(4);
    CHECK(s == q(48, 5));
    Scalar r = q(-1, 2);
    r.relu();
    CHECK(r.is_zero());
}

TEST_CASE("parse and print") {
    CHECK(Scalar::parse("3/4") == q(3, 4));
    CHECK(Scalar::parse("-3/4*2^5") == Scalar(-24));
    CHECK(Scalar::parse(" 17 ") == Scalar(17));
    CHECK(Scalar::parse("0.375") == q(3, 8));
    CHECK(Scalar::parse(q(1, 3).str()) == q(1, 3));
    CHECK(q(-5, 7).str() == "-5/7");
    CHECK_THROWS_AS(Scalar::parse("1/0"), std::invalid_argument);
    CHECK_THROWS_AS(Scalar::parse(""), std::invalid_argument);
    CHECK_THROWS_AS(Scalar::parse("x"), std::invalid_argument);
    Scalar huge = Scalar::pow2(-5000) * q(1, 3);
    CHECK(Scalar::parse(huge.str()) == huge);
}

TEST_CASE("double conversion") {
    CHECK(Scalar::from_double(0.375) == q(3, 8));
    CHECK(Scalar::from_double(-1e-300).to_double() == -1e-300);
    CHECK(q(1, 3).to_double() == doctest::Approx(1.0 / 3));
    CHECK_THROWS(Scalar::from_double(std::numeric_limits<double>::infinity()));
}

TEST_CASE("field laws on random rationals") {
    std::mt19937_64 rng(3);
    auto draw = [&] {
        long p = static_cast<long>(rng() % 2001) - 1000, r = static_cast<long>(rng() % 999) + 1;
        Scalar s = q(p, r);
        s.shift(static_cast<int64_t>(rng() % 41) - 20);
        return s;
    };
    for (int i = 0; i < 500; ++i) {
        Scalar a = draw(), b = draw(), c = draw();
        REQUIRE((a + b) + c == a + (b + c));
        REQUIRE(a * (b + c) == a * b + a * c);
        REQUIRE((a - b) + b == a);
        if (!b.is_zero()) REQUIRE((a / b) * b == a);
        REQUIRE(Scalar(a.to_mpq()) == a);
    }
}
