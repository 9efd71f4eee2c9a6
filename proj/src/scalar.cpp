#include "reludeep/scalar.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace reludeep {

namespace {

// Plain "p/q" output is used while the binary exponent stays this small.
constexpr int64_t kPlainExpLimit = 64;

uint64_t bitlen(const mpz_class& v) {
    return v == 0 ? 0 : mpz_sizeinbase(v.get_mpz_t(), 2);
}

mpz_class parse_int(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty integer");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    for (std::size_t k = i; k < s.size(); ++k)
        if (s[k] < '0' || s[k] > '9')
            throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    std::string digits(s[0] == '+' ? s.substr(1) : s);
    return mpz_class(digits, 10);
}

}  // namespace

Scalar::Scalar(long v) : num_(v) { normalize(); }

Scalar::Scalar(const mpz_class& v) : num_(v) { normalize(); }

Scalar::Scalar(const mpz_class& num, const mpz_class& den) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("zero denominator");
    if (den_ < 0) {
        den_ = -den_;
        num_ = -num_;
    }
    normalize();
}

Scalar::Scalar(const mpq_class& q) : Scalar(q.get_num(), q.get_den()) {}

Scalar Scalar::pow2(int64_t k) {
    Scalar s;
    s.num_ = 1;
    s.exp_ = k;
    return s;
}

void Scalar::set_zero() {
    num_ = 0;
    den_ = 1;
    exp_ = 0;
}

void Scalar::normalize() {
    if (num_ == 0) {
        set_zero();
        return;
    }
    mp_bitcnt_t tz = mpz_scan1(num_.get_mpz_t(), 0);
    if (tz) {
        mpz_tdiv_q_2exp(num_.get_mpz_t(), num_.get_mpz_t(), tz);
        exp_ += static_cast<int64_t>(tz);
    }
    if (den_ != 1) {
        mp_bitcnt_t tzd = mpz_scan1(den_.get_mpz_t(), 0);
        if (tzd) {
            mpz_tdiv_q_2exp(den_.get_mpz_t(), den_.get_mpz_t(), tzd);
            exp_ -= static_cast<int64_t>(tzd);
        }
        if (den_ != 1) {
            mpz_class g;
            mpz_gcd(g.get_mpz_t(), num_.get_mpz_t(), den_.get_mpz_t());
            if (g != 1) {
                mpz_divexact(num_.get_mpz_t(), num_.get_mpz_t(), g.get_mpz_t());
                mpz_divexact(den_.get_mpz_t(), den_.get_mpz_t(), g.get_mpz_t());
            }
        }
    }
}

bool Scalar::is_integer() const { return den_ == 1 && (exp_ >= 0 || num_ == 0); }

bool Scalar::is_pow2_magnitude() const {
    return den_ == 1 && (num_ == 1 || num_ == -1);
}

bool Scalar::is_dyadic() const { return den_ == 1; }

mpz_class Scalar::numerator() const {
    mpz_class r = num_;
    if (exp_ > 0) r <<= static_cast<mp_bitcnt_t>(exp_);
    return r;
}

mpz_class Scalar::denominator() const {
    mpz_class r = den_;
    if (exp_ < 0) r <<= static_cast<mp_bitcnt_t>(-exp_);
    return r;
}

mpq_class Scalar::to_mpq() const {
    mpq_class q(numerator(), denominator());
    return q;
}

double Scalar::to_double() const {
    if (num_ == 0) return 0.0;
    long en = 0, ed = 0;
    double mn = mpz_get_d_2exp(&en, num_.get_mpz_t());
    double md = mpz_get_d_2exp(&ed, den_.get_mpz_t());
    int64_t e = static_cast<int64_t>(en) - static_cast<int64_t>(ed) + exp_;
    double m = mn / md;
    if (e > 4096) return m > 0 ? HUGE_VAL : -HUGE_VAL;
    if (e < -4096) return m > 0 ? 0.0 : -0.0;
    return std::ldexp(m, static_cast<int>(e));
}

Scalar Scalar::from_double(double v) {
    if (!std::isfinite(v)) throw std::domain_error("non-finite double");
    if (v == 0.0) return Scalar();
    int e = 0;
    double m = std::frexp(v, &e);  // v = m * 2^e, 0.5 <= |m| < 1
    double mi = std::ldexp(m, 53);
    Scalar s{mpz_class(mi)};
    s.shift(static_cast<int64_t>(e) - 53);
    return s;
}

int64_t Scalar::floor_log2_abs() const {
    if (num_ == 0) throw std::domain_error("log2 of zero");
    mpz_class a = ::abs(num_);
    int64_t t = static_cast<int64_t>(bitlen(a)) - static_cast<int64_t>(bitlen(den_));
    // a / den in [2^(t-1), 2^(t+1))
    mpz_class lhs = a, rhs = den_;
    if (t >= 0)
        rhs <<= static_cast<mp_bitcnt_t>(t);
    else
        lhs <<= static_cast<mp_bitcnt_t>(-t);
    if (lhs < rhs) --t;
    return t + exp_;
}

int64_t ceil_log2(const Scalar& x) {
    if (x.sign() <= 0) throw std::domain_error("ceil_log2 of non-positive value");
    int64_t f = x.floor_log2_abs();
    return x.is_pow2_magnitude() ? f : f + 1;
}

uint64_t Scalar::num_bits() const {
    if (num_ == 0) return 0;
    return bitlen(::abs(num_)) + static_cast<uint64_t>(exp_ > 0 ? exp_ : 0);
}

uint64_t Scalar::den_bits() const {
    return bitlen(den_) + static_cast<uint64_t>(exp_ < 0 ? -exp_ : 0);
}

mpz_class Scalar::floor() const {
    if (num_ == 0) return 0;
    if (floor_log2_abs() < 0) return sign() > 0 ? 0 : -1;
    mpz_class n = num_, d = den_;
    if (exp_ >= 0)
        n <<= static_cast<mp_bitcnt_t>(exp_);
    else
        d <<= static_cast<mp_bitcnt_t>(-exp_);
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    return q;
}

mpz_class Scalar::ceil() const {
    Scalar neg = -*this;
    return -neg.floor();
}

Scalar Scalar::abs() const {
    Scalar r = *this;
    if (r.sign() < 0) r.num_ = -r.num_;
    return r;
}

void Scalar::negate() { mpz_neg(num_.get_mpz_t(), num_.get_mpz_t()); }

Scalar Scalar::operator-() const {
    Scalar r = *this;
    r.negate();
    return r;
}

void Scalar::shift(int64_t k) {
    if (num_ != 0) exp_ += k;
}

Scalar& Scalar::operator+=(const Scalar& o) {
    if (o.num_ == 0) return *this;
    if (num_ == 0) return *this = o;
    if (den_ == 1 && o.den_ == 1) {
        if (exp_ == o.exp_) {
            num_ += o.num_;
        } else if (exp_ > o.exp_) {
            mpz_mul_2exp(num_.get_mpz_t(), num_.get_mpz_t(),
                         static_cast<mp_bitcnt_t>(exp_ - o.exp_));
            num_ += o.num_;
            exp_ = o.exp_;
        } else {
            thread_local mpz_class tmp;
            mpz_mul_2exp(tmp.get_mpz_t(), o.num_.get_mpz_t(),
                         static_cast<mp_bitcnt_t>(o.exp_ - exp_));
            num_ += tmp;
        }
        normalize();
        return *this;
    }
    // General case: n1/d1 2^e1 + n2/d2 2^e2 over the common denominator d1 d2.
    int64_t e = std::min(exp_, o.exp_);
    mpz_class a = num_ * o.den_;
    mpz_class b = o.num_ * den_;
    if (exp_ > e) a <<= static_cast<mp_bitcnt_t>(exp_ - e);
    if (o.exp_ > e) b <<= static_cast<mp_bitcnt_t>(o.exp_ - e);
    num_ = a + b;
    den_ *= o.den_;
    exp_ = e;
    normalize();
    return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
    if (&o == this) {
        set_zero();
        return *this;
    }
    Scalar n = -o;
    return *this += n;
}

Scalar& Scalar::operator*=(const Scalar& o) {
    if (num_ == 0) return *this;
    if (o.num_ == 0) {
        set_zero();
        return *this;
    }
    if (den_ == 1 && o.den_ == 1) {
        num_ *= o.num_;
        exp_ += o.exp_;
        return *this;
    }
    mpz_class g1, g2;
    mpz_gcd(g1.get_mpz_t(), num_.get_mpz_t(), o.den_.get_mpz_t());
    mpz_gcd(g2.get_mpz_t(), o.num_.get_mpz_t(), den_.get_mpz_t());
    mpz_class n1 = num_ / g1, d2 = o.den_ / g1;
    mpz_class n2 = o.num_ / g2, d1 = den_ / g2;
    num_ = n1 * n2;
    den_ = d1 * d2;
    exp_ += o.exp_;
    return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
    if (o.num_ == 0) throw std::domain_error("division by zero");
    Scalar inv;
    inv.num_ = o.den_;
    inv.den_ = ::abs(o.num_);
    if (o.sign() < 0) inv.num_ = -inv.num_;
    inv.exp_ = -o.exp_;
    return *this *= inv;
}

void Scalar::add_product(const Scalar& a, const Scalar& b) {
    if (a.num_ == 0 || b.num_ == 0) return;
    if (&a != this && &b != this && a.is_pow2_magnitude() && b.den_ == 1 && den_ == 1) {
        int64_t eb = b.exp_ + a.exp_;
        bool neg = a.num_ < 0;
        if (num_ == 0) {
            num_ = b.num_;
            if (neg) negate();
            exp_ = eb;
            return;
        }
        thread_local mpz_class tmp;
        if (exp_ <= eb) {
            mpz_mul_2exp(tmp.get_mpz_t(), b.num_.get_mpz_t(), static_cast<mp_bitcnt_t>(eb - exp_));
        } else {
            mpz_mul_2exp(num_.get_mpz_t(), num_.get_mpz_t(), static_cast<mp_bitcnt_t>(exp_ - eb));
            exp_ = eb;
            tmp = b.num_;
        }
        if (neg)
            num_ -= tmp;
        else
            num_ += tmp;
        normalize();
        return;
    }
    Scalar p = a;
    p *= b;
    *this += p;
}

int cmp(const Scalar& a, const Scalar& b) {
    int sa = a.sign(), sb = b.sign();
    if (sa != sb) return sa < sb ? -1 : 1;
    if (sa == 0) return 0;
    if (a == b) return 0;
    Scalar d = a - b;
    return d.sign();
}

bool operator==(const Scalar& a, const Scalar& b) {
    return a.exp_ == b.exp_ && a.num_ == b.num_ && a.den_ == b.den_;
}

Scalar Scalar::parse(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) throw std::invalid_argument("empty number");
    int64_t extra = 0;
    if (auto star = s.find('*'); star != std::string_view::npos) {
        std::string_view tail = s.substr(star + 1);
        if (tail.size() < 3 || tail.substr(0, 2) != "2^")
            throw std::invalid_argument("bad power-of-two factor in '" + std::string(text) + "'");
        mpz_class k = parse_int(tail.substr(2));
        if (!k.fits_slong_p()) throw std::invalid_argument("exponent out of range");
        extra = k.get_si();
        s = s.substr(0, star);
    }
    Scalar r;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        mpz_class p = parse_int(s.substr(0, slash));
        mpz_class q = parse_int(s.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        r = Scalar(p, q);
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
        bool neg = !ip.empty() && ip[0] == '-';
        if (!ip.empty() && (ip[0] == '-' || ip[0] == '+')) ip.remove_prefix(1);
        if (ip.empty() && fp.empty()) throw std::invalid_argument("bad number '" + std::string(text) + "'");
        mpz_class whole = ip.empty() ? mpz_class(0) : parse_int(ip);
        mpz_class frac = fp.empty() ? mpz_class(0) : parse_int(fp);
        if (!fp.empty() && (fp[0] == '-' || fp[0] == '+'))
            throw std::invalid_argument("bad number '" + std::string(text) + "'");
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, fp.size());
        r = Scalar(whole * scale + frac, scale);
        if (neg) r.negate();
    } else {
        r = Scalar(parse_int(s));
    }
    r.shift(extra);
    return r;
}

std::string Scalar::str() const {
    if (num_ == 0) return "0";
    if (exp_ <= kPlainExpLimit && exp_ >= -kPlainExpLimit) {
        mpz_class n = numerator(), d = denominator();
        if (d == 1) return n.get_str();
        return n.get_str() + "/" + d.get_str();
    }
    std::string s = num_.get_str();
    if (den_ != 1) s += "/" + den_.get_str();
    return s + "*2^" + std::to_string(exp_);
}

std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }

}  // namespace reludeep
