#pragma once

#include "reludeep/network.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace reludeep {

/** Bad configuration or a target that violates it. */
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Distribution { Uniform, BetaBounded };
enum class Backend { Exact, Float };

struct CompileConfig {
    uint64_t d = 1, n = 1, L = 2;
    Scalar A{1}, B{1};
    Scalar eps = Scalar::pow2(-4);
    Scalar delta = Scalar::pow2(-4);
    Scalar beta{1};
    Distribution dist = Distribution::Uniform;
    uint64_t seed = 1;
    Backend backend = Backend::Exact;
    /** Fuse adjacent affine maps at fragment seams. */
    bool optimize = false;
    /** Largest depth the exact compiler may emit. */
    uint64_t depth_ceiling = 1000000;

    /** Throws PreconditionError on d > n, nonpositive parameters, delta outside (0,1), etc. */
    void validate() const;
};

/** Parses "key = value" lines (# comments). Keys match the long CLI flag names. */
std::map<std::string, std::string> parse_config_text(const std::string& text);
/** Applies one key/value to cfg; throws PreconditionError on unknown key or bad value. */
void apply_config_value(CompileConfig& cfg, const std::string& key, const std::string& value);

struct BitBudget {
    int64_t c0 = 0;
    int64_t c = 0;
};

/** Internal integer parameters derived from the configuration. */
struct Derived {
    /** A and B rounded up to powers of two. */
    Scalar A, B;
    BitBudget bits;
    /** Failure budget after the distribution and box rescaling, rounded down to a power of two. */
    Scalar delta_eff;
    /** Per-coordinate gadget parameters of the two encoders. */
    Scalar delta_parallel;
    Scalar delta_seq;
};

/** Smallest power of two >= x (x > 0). */
Scalar pow2_ceil(const Scalar& x);
/** Largest power of two <= x (x > 0). */
Scalar pow2_floor(const Scalar& x);

/**
 * c0 = ceil(2L log2(5ABnd/eps)), c = 2c0 + ceil(log2(2Ad)) + ceil(L log2((n+1)B)),
 * with A and B already rounded to powers of two.
 */
BitBudget bit_budget(const CompileConfig& cfg);
Derived derive(const CompileConfig& cfg);
/** Same with an explicit bit budget (used to build stages at small, hand-picked c0 and c). */
Derived derive(const CompileConfig& cfg, const BitBudget& bits);

/** Checks that the target matches cfg: input dim d, hidden widths <= n, depth L, |w| <= B. */
void check_target(const Network& target, const CompileConfig& cfg);

/** d, L, n and B read off the target (B at least 1), other fields default. */
CompileConfig config_for_target(const Network& target);

}  // namespace reludeep
