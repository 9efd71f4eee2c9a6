#pragma once

#include "reludeep/fragment.hpp"

#include <gmpxx.h>

namespace reludeep {

/**
 * Bits i..j (1-based, most significant first) of x left-padded to total_bits bits:
 * floor(x / 2^(total_bits - j)) mod 2^(j - i + 1). Plain integer arithmetic.
 */
mpz_class bin_oracle(const mpz_class& x, uint64_t i, uint64_t j, uint64_t total_bits);

/** phi(z) = relu(relu(2z) - relu(4z - 2)). Width 2, depth 2. */
Fragment triangle();

/**
 * floor(x * 2^c) for x in [0, 1] outside a set of measure below delta.
 * Width 5, depth 4c + 1.
 */
Fragment bit_extract_unit_interval(uint64_t c, const Scalar& delta);

/** Bit l (most significant first) of a natural x with at most total_bits bits. Width 4, depth 2l + 2. */
Fragment bit_extract_integer(uint64_t l, uint64_t total_bits);

/** Ramp from 0 to 1 across [1/2 - delta/2, 1/2 + delta/2]. Width 2, depth 2. */
Fragment soft_indicator(const Scalar& delta);

/**
 * (x, y) -> floor(x * 2^c) + y for x in [0, 1] outside a set of measure at most
 * c * delta, any y >= 0. Width 4, depth c^2 + 3c.
 */
Fragment bit_extract_seq(uint64_t c, const Scalar& delta);

namespace tape {

/** Affine helpers. */
Affine term(uint32_t wire, Scalar coeff, Scalar bias = Scalar());
Affine sum(std::initializer_list<std::pair<uint32_t, Scalar>> terms, Scalar bias = Scalar());

/**
 * Two layers: own wires listed in `keep` are passed through, then phi(arg) is
 * produced for every affine argument. Resulting own wires: keep..., phi(args)...
 */
void emit_phi(Tape& t, const std::vector<uint32_t>& keep, const std::vector<Affine>& args);

/**
 * Emits the sequential extractor on own wires [x, y].
 * Adds mult * 2^(c-i) * bit_i(x_scale * x) to y for i = 1..c.
 * Leaves own wires [x, y] when keep_x, else [y].
 */
void emit_bit_extract_seq(Tape& t, uint64_t c, const Scalar& delta, const Scalar& x_scale, const Scalar& mult,
                          bool keep_x);

}  // namespace tape

}  // namespace reludeep
