#pragma once

#include "reludeep/network.hpp"

#include <string>

namespace reludeep {

/** Depth the exact construction will have for this target: 2 + D_(L-1), D_1 = n_1, D_l = n_l (D_(l-1) + 1). */
uint64_t exact_depth(const Network& target);

/**
 * Network equal to the target on all of R^d. Wires 0..2d-1 of every hidden layer hold
 * relu(x) and relu(-x); each target layer adds one nonnegative accumulator on top.
 * Width 2d + L - 2 + d_out (at most 2(d + L - 1) for one output), depth exact_depth(target).
 * Throws PreconditionError when that depth exceeds depth_ceiling.
 */
Network exact_deep(const Network& target, uint64_t depth_ceiling = 1000000);

/** The L = 2 case: width 2d + 2, depth n + 2. */
Network exact_two_layer(const Network& target);

struct EfficiencyReport {
    uint64_t target_params = 0;
    uint64_t compiled_params = 0;
    double ratio = 0;
    /** "linear" (L = 2), "quadratic" (L = 3) or "blow-up" (L >= 4). */
    std::string regime;
};

EfficiencyReport efficiency_report(const Network& target, const Network& compiled);

}  // namespace reludeep
