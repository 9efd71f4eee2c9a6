#pragma once

#include "reludeep/config.hpp"
#include "reludeep/fragment.hpp"

#include <gmpxx.h>

#include <string>
#include <vector>

namespace reludeep {

/** One quantized neuron: sigma(sum_j sign_j * mag_j * z_j + bias). */
struct QuantizedRow {
    std::vector<mpz_class> mag;
    std::vector<int> sign;
    mpz_class bias;
};

struct QuantizedLayer {
    std::size_t cols = 0;
    std::vector<QuantizedRow> rows;
};

/**
 * mag = floor(2^c0 |w|), sign = sign(w) (+1 for zero), bias = floor(2^(2c0) b).
 * The first layer's bias is shifted by -A 2^c0 sum_j sign_j mag_j so it reads x + A.
 * A is the power-of-two rounding of cfg.A.
 */
std::vector<QuantizedLayer> quantize(const Network& target, const CompileConfig& cfg, const BitBudget& bits);

/**
 * Plain-integer run of the quantized recursion:
 *   z0_i = 2A floor(2^c0 (x_i + A) / (2A)),
 *   z^l = floor(relu(W~ z^(l-1) + b~) / 2^c0) for hidden layers,
 *   out = (W~ z^(L-1) + b~) / 2^(2c0).
 * Returns every z^l (l = 0..L-1) and the output.
 */
struct QuantizedTrace {
    std::vector<std::vector<mpz_class>> z;
    std::vector<Scalar> out;
};
QuantizedTrace quantized_recursion(const std::vector<QuantizedLayer>& q, const CompileConfig& cfg,
                                   const BitBudget& bits, const std::vector<Scalar>& x);

/** Packs blocks MSB-first: sum_i blocks[i] * 2^((k-1-i) c). */
mpz_class pack_blocks(const std::vector<mpz_class>& blocks, int64_t c);

/**
 * d -> 1: relu(x + A) / (2A) per coordinate, d parallel unit-interval extractors at c0 bits,
 * then the packed word sum_i 2A floor(2^c0 u_i) 2^((d-i) c). Width 5d.
 */
Fragment encode_input_fragment(const CompileConfig& cfg, const BitBudget& bits);

/**
 * 1 -> 1: sigma(sum_i sign_i mag_i bin_{(i-1)c+1:ic}(x) + bias) for every natural x with at
 * most n_in * c bits. With `linear_output` the last layer is identity and scaled by out_scale.
 * Width 7, depth 2 n_in c + 2.
 */
Fragment simulate_neuron_fragment(const QuantizedRow& row, const BitBudget& bits, std::size_t n_in,
                                  bool linear_output = false, const Scalar& out_scale = Scalar(1));

/** 1 -> 1: all neurons of `layer` packed MSB-first into one word. Width 9. */
Fragment simulate_layer_fragment(const QuantizedLayer& layer, const BitBudget& bits, std::size_t n_in,
                                 std::size_t n_out);

/** 1 -> 1: floor-divides every a-bit block of x by 2^a0. Width 6. */
Fragment compress_fragment(uint64_t a, uint64_t a0, std::size_t n_blocks);

/** Worst-case block lengths of the quantized recursion; throws PreconditionError if some block needs more than c bits. */
void check_block_lengths(const std::vector<QuantizedLayer>& q, const CompileConfig& cfg, const BitBudget& bits);

struct Stage {
    std::string label;
    /** Number of layers up to and including the one that holds this stage's packed word. */
    uint64_t end_layer;
};

struct Compiled {
    Network net;
    Derived derived;
    /** Packed-word boundaries; empty when seams were merged. */
    std::vector<Stage> stages;
};

/** Shared back end: encoder output -> F_1, compress, ..., F_L. */
Compiled compile_with_encoder(const Network& target, const CompileConfig& cfg, const Fragment& encoder,
                              Provenance prov);

/** Width max{5d, 10} compiler. Handles any number of outputs. */
Compiled compile_narrow_detailed(const Network& target, const CompileConfig& cfg);
Network compile_narrow(const Network& target, const CompileConfig& cfg);
Network compile_narrow_multi(const Network& target, const CompileConfig& cfg);

struct BoundedWeightsPlan {
    Scalar C;
    uint64_t depth = 0;
    uint64_t alpha = 0;
    Scalar beta{1};
};

/**
 * C is max |entry|, optionally rounded up to a power of two; C^depth = 2^alpha * beta with beta in [1, 2).
 */
BoundedWeightsPlan plan_bounded_weights(const Network& net, bool round_pow2 = true);

/** Same function with every weight and bias of magnitude at most 2. */
Network bound_weights(const Network& net, bool round_pow2 = true);

}  // namespace reludeep
