#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace reludeep {

/**
 * Exact rational number.
 *
 * Stored as (num / den) * 2^exp with den odd and positive, num odd (or zero)
 * and gcd(num, den) = 1, so every value has exactly one representation.
 * Keeping the power of two apart lets dyadic values with very large or very
 * small exponents stay compact.
 */
class Scalar {
public:
    Scalar() = default;
    Scalar(long v);  // NOLINT(google-explicit-constructor)
    Scalar(int v) : Scalar(static_cast<long>(v)) {}  // NOLINT
    explicit Scalar(const mpz_class& v);
    Scalar(const mpz_class& num, const mpz_class& den);
    explicit Scalar(const mpq_class& q);

    /** 2^k for any signed k. */
    static Scalar pow2(int64_t k);
    /** Parses "p", "p/q", optionally followed by "*2^k". Throws std::invalid_argument. */
    static Scalar parse(std::string_view text);
    /** Nearest-exact conversion of a finite double (every double is dyadic). */
    static Scalar from_double(double v);

    int sign() const { return mpz_sgn(num_.get_mpz_t()); }
    bool is_zero() const { return sign() == 0; }
    bool is_integer() const;
    /** True for +-2^k. */
    bool is_pow2_magnitude() const;
    /** True when the value is k / 2^m for integers k, m. */
    bool is_dyadic() const;

    /** Numerator and denominator in lowest terms (den > 0). */
    mpz_class numerator() const;
    mpz_class denominator() const;
    mpq_class to_mpq() const;
    double to_double() const;

    /** Odd part of the numerator, odd denominator and binary exponent. */
    const mpz_class& odd_num() const { return num_; }
    const mpz_class& odd_den() const { return den_; }
    int64_t exp2() const { return exp_; }

    /** floor(log2 |x|) for x != 0. */
    int64_t floor_log2_abs() const;
    /** Bit length of numerator and denominator in lowest terms. */
    uint64_t num_bits() const;
    uint64_t den_bits() const;

    mpz_class floor() const;
    mpz_class ceil() const;

    Scalar abs() const;
    Scalar operator-() const;
    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o);
    Scalar& operator*=(const Scalar& o);
    Scalar& operator/=(const Scalar& o);
    /** this += a * b. */
    void add_product(const Scalar& a, const Scalar& b);
    /** Multiply by 2^k in place. */
    void shift(int64_t k);
    void negate();
    void relu() {
        if (sign() < 0) set_zero();
    }
    void set_zero();

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }

    friend int cmp(const Scalar& a, const Scalar& b);
    friend bool operator==(const Scalar& a, const Scalar& b);
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }
    friend bool operator<(const Scalar& a, const Scalar& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const Scalar& a, const Scalar& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const Scalar& a, const Scalar& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const Scalar& a, const Scalar& b) { return cmp(a, b) >= 0; }

    /**
     * Text form. Plain "p" or "p/q" when the power of two is small,
     * otherwise "p/q*2^k" so huge dyadic factors stay short.
     */
    std::string str() const;

private:
    void normalize();

    mpz_class num_{0};
    mpz_class den_{1};
    int64_t exp_ = 0;
};

std::ostream& operator<<(std::ostream& os, const Scalar& s);

/** Smallest k with 2^k >= x, for x > 0. */
int64_t ceil_log2(const Scalar& x);

}  // namespace reludeep
