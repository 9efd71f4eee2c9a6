#include "reludeep/minwidth.hpp"

#include "reludeep/gadgets.hpp"

namespace reludeep {

using tape::term;

Fragment encode_input_seq_fragment(const CompileConfig& cfg, const BitBudget& bits) {
    Derived dv = derive(cfg, bits);
    const std::size_t d = cfg.d;
    const Scalar& A = dv.A;
    if (bits.c < bits.c0 + A.floor_log2_abs() + 1)
        throw PreconditionError("block size c must be at least c0 + log2(A) + 1");
    const auto c0 = static_cast<uint64_t>(bits.c0);
    const Scalar& delta = dv.delta_seq;
    const Scalar twoA = Scalar(2) * A;
    const Scalar block = Scalar::pow2(bits.c);
    // depth of one sequential extraction
    const uint64_t S = c0 * c0 + 3 * c0;

    Tape t(d);
    // u_i = relu(x_i + A) / (2A)
    std::vector<Affine> rows;
    for (std::size_t i = 0; i < d; ++i)
        rows.push_back(term(static_cast<uint32_t>(i), Scalar(1) / twoA, Scalar::pow2(-1)));
    t.emit(rows);

    if (d == 1) {
        t.emit({pass(0), constant(Scalar())});
        tape::emit_bit_extract_seq(t, c0, delta, Scalar(1), twoA, false);
        return Fragment(d, t.take(), 4, S + 2);
    }

    // own [u1, u2], carried u3..ud
    t.set_carry(d - 2);
    // v = floor(2^c0 u1) + u2
    tape::emit_bit_extract_seq(t, c0, delta, Scalar(1), Scalar(1), false);
    // [v, floor(v)]
    t.emit({pass(0), constant(Scalar())});
    tape::emit_bit_extract_seq(t, c0, delta, Scalar::pow2(-bits.c0), Scalar(1), true);
    // [u2 = v - floor(v), 2^c * 2A floor(v)], then append block 2
    t.emit({tape::sum({{0, Scalar(1)}, {1, Scalar(-1)}}), term(1, block * twoA)});
    tape::emit_bit_extract_seq(t, c0, delta, Scalar(1), twoA, false);
    for (std::size_t i = 3; i <= d; ++i) {
        // own [Y, u_i], carried u_(i+1)..u_d
        t.set_carry(d - i);
        t.emit({pass(1), term(0, block)});
        tape::emit_bit_extract_seq(t, c0, delta, Scalar(1), twoA, false);
    }
    return Fragment(d, t.take(), d + 2, (d + 1) * (S + 1));
}

Compiled compile_minwidth_detailed(const Network& target, const CompileConfig& cfg) {
    check_target(target, cfg);
    return compile_with_encoder(target, cfg, encode_input_seq_fragment(cfg, bit_budget(cfg)),
                                Provenance::CompiledMinwidth);
}

Network compile_minwidth(const Network& target, const CompileConfig& cfg) {
    return compile_minwidth_detailed(target, cfg).net;
}

}  // namespace reludeep
