#pragma once

#include "reludeep/narrowing.hpp"

namespace reludeep {

/**
 * d -> 1 sequential encoder of width d + 2. Produces the same packed word as
 * encode_input_fragment on the good set. The first coordinate's bits are parked
 * in the integer part of the second coordinate, split off again by an
 * integer-part extraction, and the remaining coordinates are appended one block
 * at a time. Depth O(c0^2 d).
 */
Fragment encode_input_seq_fragment(const CompileConfig& cfg, const BitBudget& bits);

/** Width max{d + 2, 10} compiler: the narrow pipeline behind the sequential encoder. */
Compiled compile_minwidth_detailed(const Network& target, const CompileConfig& cfg);
Network compile_minwidth(const Network& target, const CompileConfig& cfg);

}  // namespace reludeep
