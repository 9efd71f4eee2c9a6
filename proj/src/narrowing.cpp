#include "reludeep/narrowing.hpp"

#include "reludeep/gadgets.hpp"

#include <functional>

namespace reludeep {

namespace {

using tape::sum;
using tape::term;

mpz_class to_mpz(const Scalar& s) {
    if (!s.is_integer()) throw std::logic_error("expected an integer scalar");
    return s.floor();
}

// y += a * x
void axpy(Affine& y, const Scalar& a, const Affine& x) {
    if (a.is_zero()) return;
    for (const auto& [w, v] : x.terms) y.terms.emplace_back(w, v * a);
    y.bias.add_product(a, x.bias);
}

Affine scaled(const Affine& x, const Scalar& a, const Scalar& shift = Scalar()) {
    Affine r;
    axpy(r, a, x);
    r.bias += shift;
    return r;
}

using CoefFn = std::function<Scalar(std::size_t acc, uint64_t bit)>;

struct WalkEnd {
    /** Accumulator values over the last emitted layer, still to be materialized. */
    std::vector<Affine> acc;
    /** Wires of the passive values in the last emitted layer. */
    std::vector<uint32_t> passive;
};

/*
 * Walks bits 1..last (MSB first) of a natural x with at most T bits, read through
 * p = x/2^T + 2^-(T+1) and q = x/2^T + 2^-(T+2). Bit l is
 * relu(2^(T+2-l) (phi^l(q) - phi^l(p))). Each bit costs two layers: the first
 * doubles/shifts p and q for the next phi step and evaluates the previous bit,
 * the second finishes phi and adds coef(k, l) * bit into accumulator k.
 * Accumulators and passive values must be nonnegative.
 * Layer width: |acc| + |passive| + 5.
 */
WalkEnd walk_bits(Tape& t, const Affine& x, uint64_t T, uint64_t last, std::vector<Affine> acc,
                  std::vector<Affine> passive, const CoefFn& coef) {
    const auto Ti = static_cast<int64_t>(T);
    const std::size_t na = acc.size(), np = passive.size();
    Affine p = scaled(x, Scalar::pow2(-Ti), Scalar::pow2(-Ti - 1));
    Affine q = scaled(x, Scalar::pow2(-Ti), Scalar::pow2(-Ti - 2));

    auto needs_bit = [&](uint64_t l) {
        for (std::size_t k = 0; k < na; ++k)
            if (!coef(k, l).is_zero()) return true;
        return false;
    };
    auto bit_row = [&](uint64_t l) {
        Scalar K = Scalar::pow2(Ti + 2 - static_cast<int64_t>(l));
        Affine d = scaled(q, K);
        axpy(d, -K, p);
        return d;
    };
    // emits [acc..., passive..., extra...] and rebinds acc/passive to the new wires
    auto emit = [&](const std::vector<Affine>& extra) {
        std::vector<Affine> rows = acc;
        rows.insert(rows.end(), passive.begin(), passive.end());
        rows.insert(rows.end(), extra.begin(), extra.end());
        t.emit(rows);
        for (std::size_t k = 0; k < na; ++k) acc[k] = pass(static_cast<uint32_t>(k));
        for (std::size_t k = 0; k < np; ++k) passive[k] = pass(static_cast<uint32_t>(na + k));
    };
    const auto base = static_cast<uint32_t>(na + np);
    auto add_bit = [&](uint64_t l, uint32_t wire) {
        for (std::size_t k = 0; k < na; ++k) axpy(acc[k], coef(k, l), pass(wire));
    };

    for (uint64_t l = 1; l <= last; ++l) {
        std::vector<Affine> extra{scaled(p, Scalar(2)), scaled(p, Scalar(4), Scalar(-2)), scaled(q, Scalar(2)),
                                  scaled(q, Scalar(4), Scalar(-2))};
        bool prev = l > 1 && needs_bit(l - 1);
        if (prev) extra.push_back(bit_row(l - 1));
        emit(extra);
        if (prev) add_bit(l - 1, base + 4);
        emit({sum({{base, Scalar(1)}, {base + 1, Scalar(-1)}}), sum({{base + 2, Scalar(1)}, {base + 3, Scalar(-1)}})});
        p = pass(base);
        q = pass(base + 1);
    }
    if (needs_bit(last)) {
        emit({bit_row(last)});
        add_bit(last, base);
    }
    WalkEnd end;
    end.acc = std::move(acc);
    for (std::size_t k = 0; k < np; ++k) end.passive.push_back(static_cast<uint32_t>(na + k));
    return end;
}

void check_row(const QuantizedRow& row, const BitBudget& bits, std::size_t n_in) {
    if (row.mag.size() != n_in || row.sign.size() != n_in)
        throw PreconditionError("quantized row has " + std::to_string(row.mag.size()) + " weights, expected " +
                                std::to_string(n_in));
    for (const auto& m : row.mag)
        if (m < 0 || (m != 0 && static_cast<int64_t>(mpz_sizeinbase(m.get_mpz_t(), 2)) > bits.c))
            throw PreconditionError("quantized weight " + m.get_str() + " needs more than c = " +
                                    std::to_string(bits.c) + " bits");
    mpz_class b = abs(row.bias);
    if (b != 0 && static_cast<int64_t>(mpz_sizeinbase(b.get_mpz_t(), 2)) > bits.c)
        throw PreconditionError("quantized bias " + row.bias.get_str() + " needs more than c = " +
                                std::to_string(bits.c) + " bits");
}

// Bit l of an n_in-block word lands in block (l-1)/c at position (l-1)%c + 1.
CoefFn neuron_coef(const QuantizedRow& row, int64_t c) {
    return [&row, c](std::size_t acc, uint64_t l) {
        auto i = static_cast<std::size_t>((static_cast<int64_t>(l) - 1) / c);
        int64_t pos = (static_cast<int64_t>(l) - 1) % c + 1;
        if ((row.sign[i] < 0) != (acc == 1) || row.mag[i] == 0) return Scalar();
        Scalar v(row.mag[i]);
        v.shift(c - pos);
        return v;
    };
}

Affine neuron_value(const WalkEnd& end, const QuantizedRow& row) {
    Affine v = end.acc[0];
    axpy(v, Scalar(-1), end.acc[1]);
    v.bias += Scalar(row.bias);
    return v;
}

Fragment linear_tail(const Fragment& f) {
    auto layers = f.layers();
    layers.back() = std::make_shared<const Layer>(layers.back()->with_activation(Activation::Identity));
    return Fragment(f.input_arity(), std::move(layers), f.declared_width(), f.declared_depth());
}

Scalar pow_int(const Scalar& x, uint64_t k) {
    Scalar r(1);
    for (uint64_t i = 0; i < k; ++i) r *= x;
    return r;
}

}  // namespace

std::vector<QuantizedLayer> quantize(const Network& target, const CompileConfig& cfg, const BitBudget& bits) {
    const Scalar A = pow2_ceil(cfg.A);
    std::vector<QuantizedLayer> out;
    for (uint64_t l = 0; l < target.depth(); ++l) {
        const Layer& L = target.layer(l);
        QuantizedLayer q;
        q.cols = L.cols();
        for (std::size_t r = 0; r < L.rows(); ++r) {
            QuantizedRow row;
            mpz_class signed_sum = 0;
            for (std::size_t c = 0; c < L.cols(); ++c) {
                Scalar w = L.w(r, c);
                Scalar m = w.abs();
                m.shift(bits.c0);
                row.mag.push_back(m.floor());
                row.sign.push_back(w.sign() < 0 ? -1 : 1);
                signed_sum += row.sign.back() * row.mag.back();
            }
            Scalar b = L.b(r);
            b.shift(2 * bits.c0);
            row.bias = b.floor();
            if (l == 0) {
                mpz_class shift = to_mpz(A);
                mpz_mul_2exp(shift.get_mpz_t(), shift.get_mpz_t(), static_cast<mp_bitcnt_t>(bits.c0));
                row.bias -= shift * signed_sum;
            }
            q.rows.push_back(std::move(row));
        }
        out.push_back(std::move(q));
    }
    return out;
}

QuantizedTrace quantized_recursion(const std::vector<QuantizedLayer>& q, const CompileConfig& cfg,
                                   const BitBudget& bits, const std::vector<Scalar>& x) {
    if (q.empty()) throw PreconditionError("empty quantized network");
    if (x.size() != q.front().cols) throw PreconditionError("input dimension mismatch");
    const Scalar A = pow2_ceil(cfg.A);
    const mpz_class twoA = 2 * to_mpz(A);
    QuantizedTrace tr;
    std::vector<mpz_class> z;
    for (const auto& xi : x) {
        Scalar u = (xi + A) / (Scalar(2) * A);
        u.shift(bits.c0);
        z.push_back(twoA * u.floor());
    }
    tr.z.push_back(z);
    for (std::size_t l = 0; l < q.size(); ++l) {
        std::vector<mpz_class> next;
        for (const auto& row : q[l].rows) {
            mpz_class s = row.bias;
            for (std::size_t j = 0; j < z.size(); ++j) s += row.sign[j] * row.mag[j] * z[j];
            if (l + 1 == q.size()) {
                Scalar o(s);
                o.shift(-2 * bits.c0);
                tr.out.push_back(o);
            } else {
                if (s < 0) s = 0;
                mpz_fdiv_q_2exp(s.get_mpz_t(), s.get_mpz_t(), static_cast<mp_bitcnt_t>(bits.c0));
                next.push_back(s);
            }
        }
        if (l + 1 < q.size()) {
            z = std::move(next);
            tr.z.push_back(z);
        }
    }
    return tr;
}

mpz_class pack_blocks(const std::vector<mpz_class>& blocks, int64_t c) {
    mpz_class r = 0;
    for (const auto& b : blocks) {
        mpz_mul_2exp(r.get_mpz_t(), r.get_mpz_t(), static_cast<mp_bitcnt_t>(c));
        r += b;
    }
    return r;
}

Fragment encode_input_fragment(const CompileConfig& cfg, const BitBudget& bits) {
    Derived dv = derive(cfg, bits);
    const std::size_t d = cfg.d;
    const Scalar& A = dv.A;
    if (bits.c < bits.c0 + A.floor_log2_abs() + 1)
        throw PreconditionError("block size c must be at least c0 + log2(A) + 1");
    // u_i = relu(x_i + A) / (2A)
    std::vector<Affine> shift_rows;
    Scalar inv = Scalar(1) / (Scalar(2) * A);
    for (std::size_t i = 0; i < d; ++i) shift_rows.push_back(term(static_cast<uint32_t>(i), inv, Scalar::pow2(-1)));
    std::vector<Layer> f0;
    f0.push_back(make_layer(d, shift_rows));
    Fragment enc(d, std::move(f0), d, 1);

    Fragment g = bit_extract_unit_interval(static_cast<uint64_t>(bits.c0), dv.delta_parallel);
    Fragment par = g;
    for (std::size_t i = 1; i < d; ++i) par = parallel(par, g);
    enc = compose(enc, par);

    Affine word;
    for (std::size_t i = 0; i < d; ++i) {
        Scalar k = Scalar(2) * A;
        k.shift(static_cast<int64_t>(d - 1 - i) * bits.c);
        word.terms.emplace_back(static_cast<uint32_t>(i), k);
    }
    std::vector<Layer> pack;
    pack.push_back(make_layer(d, {word}));
    return compose(enc, Fragment(d, std::move(pack), d, 1));
}

Fragment simulate_neuron_fragment(const QuantizedRow& row, const BitBudget& bits, std::size_t n_in,
                                  bool linear_output, const Scalar& out_scale) {
    if (n_in == 0) throw PreconditionError("neuron needs at least one input block");
    check_row(row, bits, n_in);
    const uint64_t T = n_in * static_cast<uint64_t>(bits.c);
    Tape t(1);
    WalkEnd end = walk_bits(t, pass(0), T, T, {constant(Scalar()), constant(Scalar())}, {}, neuron_coef(row, bits.c));
    Affine v = neuron_value(end, row);
    if (linear_output)
        t.emit({scaled(v, out_scale)}, Activation::Identity);
    else
        t.emit({v});
    return Fragment(1, t.take(), 7, 2 * T + 2);
}

Fragment simulate_layer_fragment(const QuantizedLayer& layer, const BitBudget& bits, std::size_t n_in,
                                 std::size_t n_out) {
    if (layer.rows.size() != n_out)
        throw PreconditionError("layer has " + std::to_string(layer.rows.size()) + " neurons, expected " +
                                std::to_string(n_out));
    if (n_out == 0) throw PreconditionError("layer needs at least one neuron");
    for (const auto& row : layer.rows) check_row(row, bits, n_in);
    const uint64_t T = n_in * static_cast<uint64_t>(bits.c);
    Tape t(1);
    Affine x = pass(0), y = constant(Scalar());
    for (std::size_t k = 0; k < n_out; ++k) {
        const bool last = k + 1 == n_out;
        std::vector<Affine> passive;
        if (!last) passive.push_back(x);
        passive.push_back(y);
        WalkEnd end = walk_bits(t, x, T, T, {constant(Scalar()), constant(Scalar())}, passive,
                                neuron_coef(layer.rows[k], bits.c));
        std::vector<Affine> rows;
        for (uint32_t w : end.passive) rows.push_back(pass(w));
        rows.push_back(neuron_value(end, layer.rows[k]));
        t.emit(rows);
        // next accumulator: y 2^c + t_k
        const auto yw = static_cast<uint32_t>(last ? 0 : 1);
        Scalar shift = Scalar::pow2(bits.c);
        x = pass(0);
        y = sum({{yw, shift}, {yw + 1, Scalar(1)}});
    }
    t.emit({y});
    return Fragment(1, t.take(), 9, n_out * (2 * T + 2) + 1);
}

Fragment compress_fragment(uint64_t a, uint64_t a0, std::size_t n_blocks) {
    if (a0 >= a) throw PreconditionError("compress needs a0 < a");
    if (n_blocks == 0) throw PreconditionError("compress needs at least one block");
    const uint64_t T = a * n_blocks;
    const uint64_t last = (n_blocks - 1) * a + (a - a0);
    CoefFn coef = [=](std::size_t, uint64_t l) {
        uint64_t j = (l - 1) / a, pos = (l - 1) % a + 1;
        if (pos > a - a0) return Scalar();
        return Scalar::pow2(static_cast<int64_t>((n_blocks - 1 - j) * a + (a - a0 - pos)));
    };
    Tape t(1);
    WalkEnd end = walk_bits(t, pass(0), T, last, {constant(Scalar())}, {}, coef);
    t.emit({end.acc[0]});
    return Fragment(1, t.take(), 6, 2 * last + 2);
}

void check_block_lengths(const std::vector<QuantizedLayer>& q, const CompileConfig& cfg, const BitBudget& bits) {
    const Scalar A = pow2_ceil(cfg.A);
    mpz_class limit = 1;
    mpz_mul_2exp(limit.get_mpz_t(), limit.get_mpz_t(), static_cast<mp_bitcnt_t>(bits.c));
    mpz_class Z = 2 * to_mpz(A);
    mpz_mul_2exp(Z.get_mpz_t(), Z.get_mpz_t(), static_cast<mp_bitcnt_t>(bits.c0));
    if (Z >= limit) throw PreconditionError("encoded coordinates need more than c bits");
    for (std::size_t l = 0; l < q.size(); ++l) {
        mpz_class nextZ = 0;
        for (std::size_t i = 0; i < q[l].rows.size(); ++i) {
            const auto& row = q[l].rows[i];
            check_row(row, bits, q[l].cols);
            mpz_class M = abs(row.bias);
            for (const auto& m : row.mag) M += m * Z;
            if (l + 1 < q.size() && M >= limit)
                throw PreconditionError("layer " + std::to_string(l + 1) + " neuron " + std::to_string(i + 1) +
                                        ": worst-case value " + M.get_str() + " needs more than c = " +
                                        std::to_string(bits.c) + " bits");
            mpz_class zi;
            mpz_fdiv_q_2exp(zi.get_mpz_t(), M.get_mpz_t(), static_cast<mp_bitcnt_t>(bits.c0));
            if (zi > nextZ) nextZ = zi;
        }
        Z = nextZ;
    }
}

Compiled compile_with_encoder(const Network& target, const CompileConfig& cfg, const Fragment& encoder,
                              Provenance prov) {
    check_target(target, cfg);
    Compiled out;
    out.derived = derive(cfg);
    const BitBudget& bits = out.derived.bits;
    auto q = quantize(target, cfg, bits);
    check_block_lengths(q, cfg, bits);

    Fragment frag = encoder;
    auto append = [&](const Fragment& g, const std::string& label) {
        if (cfg.optimize)
            frag = compose(linear_tail(frag), g, true);
        else
            frag = compose(frag, g);
        out.stages.push_back({label, frag.measured_depth()});
    };
    out.stages.push_back({"encode", frag.measured_depth()});
    std::size_t n_in = cfg.d;
    for (std::size_t l = 0; l + 1 < q.size(); ++l) {
        std::size_t n_out = q[l].rows.size();
        append(simulate_layer_fragment(q[l], bits, n_in, n_out), "layer" + std::to_string(l + 1));
        append(compress_fragment(static_cast<uint64_t>(bits.c), static_cast<uint64_t>(bits.c0), n_out),
               "compress" + std::to_string(l + 1));
        n_in = n_out;
    }
    const Scalar scale = Scalar::pow2(-2 * bits.c0);
    Fragment last = simulate_neuron_fragment(q.back().rows[0], bits, n_in, true, scale);
    for (std::size_t r = 1; r < q.back().rows.size(); ++r)
        last = parallel_shared(last, simulate_neuron_fragment(q.back().rows[r], bits, n_in, true, scale));
    append(last, "output");
    out.stages.pop_back();
    if (cfg.optimize) out.stages.clear();
    out.net = wrap(frag, target.name().empty() ? "" : target.name() + "-compiled", prov);
    return out;
}

Compiled compile_narrow_detailed(const Network& target, const CompileConfig& cfg) {
    check_target(target, cfg);
    return compile_with_encoder(target, cfg, encode_input_fragment(cfg, bit_budget(cfg)), Provenance::CompiledNarrow);
}

Network compile_narrow_multi(const Network& target, const CompileConfig& cfg) {
    return compile_narrow_detailed(target, cfg).net;
}

Network compile_narrow(const Network& target, const CompileConfig& cfg) { return compile_narrow_multi(target, cfg); }

BoundedWeightsPlan plan_bounded_weights(const Network& net, bool round_pow2) {
    BoundedWeightsPlan plan;
    plan.depth = net.depth();
    Scalar C;
    for (const auto& run : net.runs()) {
        for (const auto& v : run.layer->weights())
            if (v.abs() > C) C = v.abs();
        for (const auto& v : run.layer->bias())
            if (v.abs() > C) C = v.abs();
    }
    if (C.is_zero()) {
        plan.C = C;
        return plan;
    }
    if (round_pow2) C = pow2_ceil(C);
    plan.C = C;
    if (C.is_pow2_magnitude()) {
        int64_t k = C.floor_log2_abs();
        if (k < 0) {
            plan.alpha = 0;
            plan.beta = pow_int(C, plan.depth);
        } else {
            plan.alpha = static_cast<uint64_t>(k) * plan.depth;
        }
        return plan;
    }
    Scalar P = pow_int(C, plan.depth);
    int64_t k = P.floor_log2_abs();
    plan.alpha = k < 0 ? 0 : static_cast<uint64_t>(k);
    plan.beta = P / Scalar::pow2(static_cast<int64_t>(plan.alpha));
    return plan;
}

Network bound_weights(const Network& net, bool round_pow2) {
    net.validate();
    BoundedWeightsPlan plan = plan_bounded_weights(net, round_pow2);
    if (plan.C.is_zero() || plan.C <= Scalar(2)) return net;
    const Scalar invC = Scalar(1) / plan.C;
    Network out(net.input_dim(), net.name(), Provenance::CompiledBounded);

    auto scaled_layer = [](const Layer& L, const Scalar& ws, const Scalar& bs, Activation act) {
        std::vector<Scalar> w = L.weights(), b = L.bias();
        for (auto& v : w) v *= ws;
        for (auto& v : b) v *= bs;
        return Layer(L.rows(), L.cols(), std::move(w), std::move(b), act);
    };

    uint64_t index = 0;
    Scalar bias_scale(1);
    for (const auto& run : net.runs()) {
        const Layer& L = *run.layer;
        bool zero_bias = true;
        for (const auto& v : L.bias()) zero_bias = zero_bias && v.is_zero();
        for (uint64_t k = 0; k < run.count; ++k) {
            ++index;
            bias_scale *= invC;
            if (index == net.depth()) {
                // split the affine output into (relu(z), relu(-z))
                std::size_t r = L.rows(), c = L.cols();
                std::vector<Scalar> w(2 * r * c), b(2 * r);
                for (std::size_t i = 0; i < r; ++i) {
                    for (uint32_t j : L.row_support(i)) {
                        w[i * c + j] = L.w(i, j) * invC;
                        w[(r + i) * c + j] = -w[i * c + j];
                    }
                    b[i] = L.b(i) * bias_scale;
                    b[r + i] = -b[i];
                }
                out.push(Layer(2 * r, c, std::move(w), std::move(b), Activation::ReLU));
                break;
            }
            if (zero_bias) {
                // every repeat is the same scaled layer
                uint64_t rest = std::min<uint64_t>(run.count - k, net.depth() - index);
                out.push(scaled_layer(L, invC, Scalar(), L.activation()), rest);
                for (uint64_t s = 1; s < rest; ++s) bias_scale *= invC;
                index += rest - 1;
                k += rest - 1;
                continue;
            }
            out.push(scaled_layer(L, invC, bias_scale, L.activation()));
        }
    }

    const std::size_t k = 2 * net.output_dim();
    auto diag = [k](const Scalar& v) {
        std::vector<Scalar> w(k * k), b(k);
        for (std::size_t i = 0; i < k; ++i) w[i * k + i] = v;
        return Layer(k, k, std::move(w), std::move(b), Activation::ReLU);
    };
    if (plan.alpha > 0) out.push(diag(Scalar(2)), plan.alpha);
    if (plan.beta != Scalar(1)) out.push(diag(plan.beta));
    const std::size_t m = net.output_dim();
    std::vector<Scalar> w(m * k), b(m);
    for (std::size_t i = 0; i < m; ++i) {
        w[i * k + i] = Scalar(1);
        w[i * k + m + i] = Scalar(-1);
    }
    out.push(Layer(m, k, std::move(w), std::move(b), Activation::Identity));
    out.validate();
    return out;
}

}  // namespace reludeep
