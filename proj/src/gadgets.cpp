#include "reludeep/gadgets.hpp"

#include <stdexcept>

namespace reludeep {

mpz_class bin_oracle(const mpz_class& x, uint64_t i, uint64_t j, uint64_t total_bits) {
    if (x < 0) throw std::invalid_argument("bin_oracle: x must be natural");
    if (i < 1 || i > j || j > total_bits) throw std::invalid_argument("bin_oracle: need 1 <= i <= j <= total_bits");
    if (x != 0 && mpz_sizeinbase(x.get_mpz_t(), 2) > total_bits)
        throw std::invalid_argument("bin_oracle: x has more than total_bits bits");
    mpz_class q;
    mpz_fdiv_q_2exp(q.get_mpz_t(), x.get_mpz_t(), total_bits - j);
    mpz_class r;
    mpz_fdiv_r_2exp(r.get_mpz_t(), q.get_mpz_t(), j - i + 1);
    return r;
}

namespace tape {

Affine term(uint32_t wire, Scalar coeff, Scalar bias) { return Affine{{{wire, std::move(coeff)}}, std::move(bias)}; }

Affine sum(std::initializer_list<std::pair<uint32_t, Scalar>> terms, Scalar bias) {
    Affine a;
    for (const auto& t : terms) a.terms.push_back(t);
    a.bias = std::move(bias);
    return a;
}

namespace {

Affine scaled(const Affine& a, const Scalar& k, const Scalar& shift) {
    Affine r;
    for (const auto& [w, v] : a.terms) r.terms.emplace_back(w, v * k);
    r.bias = a.bias * k + shift;
    return r;
}

}  // namespace

void emit_phi(Tape& t, const std::vector<uint32_t>& keep, const std::vector<Affine>& args) {
    std::vector<Affine> first;
    for (uint32_t k : keep) first.push_back(pass(k));
    for (const auto& a : args) {
        first.push_back(scaled(a, Scalar(2), Scalar()));
        first.push_back(scaled(a, Scalar(4), Scalar(-2)));
    }
    t.emit(first);
    std::vector<Affine> second;
    auto nk = static_cast<uint32_t>(keep.size());
    for (uint32_t k = 0; k < nk; ++k) second.push_back(pass(k));
    for (uint32_t a = 0; a < args.size(); ++a)
        second.push_back(sum({{nk + 2 * a, Scalar(1)}, {nk + 2 * a + 1, Scalar(-1)}}));
    t.emit(second);
}

void emit_bit_extract_seq(Tape& t, uint64_t c, const Scalar& delta, const Scalar& x_scale, const Scalar& mult,
                          bool keep_x) {
    const Scalar half = Scalar::pow2(-1);
    const Scalar inv_delta = Scalar(1) / delta;
    for (uint64_t i = 1; i <= c; ++i) {
        // phi^(i)(x_scale * x - 2^-(i+1)), iterated from x each time.
        emit_phi(t, {0, 1}, {term(0, x_scale, -Scalar::pow2(-static_cast<int64_t>(i) - 1))});
        for (uint64_t k = 2; k <= i; ++k) emit_phi(t, {0, 1}, {pass(2)});
        // soft indicator of phi >= 1/2
        t.emit({pass(0), pass(1), term(2, Scalar(1), -half + delta * half), term(2, Scalar(1), -half - delta * half)});
        Scalar k = mult * Scalar::pow2(static_cast<int64_t>(c - i)) * inv_delta;
        Affine y = sum({{1, Scalar(1)}, {2, k}, {3, -k}});
        if (keep_x || i < c)
            t.emit({pass(0), y});
        else
            t.emit({y});
    }
}

}  // namespace tape

using tape::emit_phi;
using tape::sum;
using tape::term;

Fragment triangle() {
    Tape t(1);
    emit_phi(t, {}, {pass(0)});
    return Fragment(1, t.take(), 2, 2);
}

Fragment bit_extract_unit_interval(uint64_t c, const Scalar& delta) {
    if (c == 0) throw std::invalid_argument("bit_extract_unit_interval: c must be positive");
    if (delta.sign() <= 0 || delta >= Scalar(1)) throw std::invalid_argument("bit_extract_unit_interval: need 0 < delta < 1");
    const auto ci = static_cast<int64_t>(c);
    Tape t(1);
    // [y, p, q] with p = x + delta/2^(c+1), q = x + delta/2^(c+2)
    t.emit({constant(Scalar()), term(0, Scalar(1), delta * Scalar::pow2(-ci - 1)),
            term(0, Scalar(1), delta * Scalar::pow2(-ci - 2))});
    for (uint64_t i = 1; i <= c; ++i) {
        emit_phi(t, {0}, {pass(1), pass(2)});
        Scalar k = Scalar::pow2(ci + 2 - static_cast<int64_t>(i)) / delta;
        t.emit({pass(0), pass(1), pass(2), sum({{2, k}, {1, -k}})});
        Affine y = sum({{0, Scalar(2)}, {3, Scalar(1)}});
        if (i < c)
            t.emit({y, pass(1), pass(2)});
        else
            t.emit({y});
    }
    return Fragment(1, t.take(), 5, 4 * c + 1);
}

Fragment bit_extract_integer(uint64_t l, uint64_t total_bits) {
    if (l < 1 || l > total_bits) throw std::invalid_argument("bit_extract_integer: need 1 <= l <= total_bits");
    const auto T = static_cast<int64_t>(total_bits);
    Tape t(1);
    Scalar inv = Scalar::pow2(-T);
    t.emit({term(0, inv, Scalar::pow2(-T - 1)), term(0, inv, Scalar::pow2(-T - 2))});
    for (uint64_t k = 1; k <= l; ++k) emit_phi(t, {}, {pass(0), pass(1)});
    Scalar K = Scalar::pow2(T + 2 - static_cast<int64_t>(l));
    t.emit({sum({{1, K}, {0, -K}})});
    return Fragment(1, t.take(), 4, 2 * l + 2);
}

Fragment soft_indicator(const Scalar& delta) {
    if (delta.sign() <= 0 || delta >= Scalar(1)) throw std::invalid_argument("soft_indicator: need 0 < delta < 1");
    const Scalar half = Scalar::pow2(-1);
    Tape t(1);
    t.emit({term(0, Scalar(1), -half + delta * half), term(0, Scalar(1), -half - delta * half)});
    Scalar k = Scalar(1) / delta;
    t.emit({sum({{0, k}, {1, -k}})});
    return Fragment(1, t.take(), 2, 2);
}

Fragment bit_extract_seq(uint64_t c, const Scalar& delta) {
    if (c == 0) throw std::invalid_argument("bit_extract_seq: c must be positive");
    if (delta.sign() <= 0 || delta >= Scalar(1)) throw std::invalid_argument("bit_extract_seq: need 0 < delta < 1");
    Tape t(2);
    tape::emit_bit_extract_seq(t, c, delta, Scalar(1), Scalar(1), false);
    return Fragment(2, t.take(), 4, c * c + 3 * c);
}

}  // namespace reludeep
