#pragma once

#include "reludeep/config.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace reludeep {

/** Layout d -> n -> ... -> n -> 1 (L layers) with i.i.d. weights k / 2^p in [-B, B]. */
Network generate_target(std::size_t d, std::size_t n, std::size_t L, const Scalar& B, uint64_t seed,
                        unsigned precision_bits = 4);

/** Uniform integer in [0, bound) from a 64-bit engine; same sequence on every platform. */
mpz_class uniform_below(std::mt19937_64& rng, const mpz_class& bound);

/** Uniform dyadic point of [-A, A]^d at resolution 2A / 2^bits. */
std::vector<Scalar> sample_box(std::mt19937_64& rng, std::size_t d, const Scalar& A, int64_t bits);
/**
 * Random cell midpoint (2k + 1) 2A / 2^(c0+1) - A per coordinate, A being the power-of-two box.
 * Coordinates outside [-limit, limit] are redrawn.
 */
std::vector<Scalar> sample_good_point(std::mt19937_64& rng, std::size_t d, const Scalar& A, int64_t c0,
                                      const Scalar& limit);
/** Random rational point: mixes box points, small fractions and magnitudes up to 10^6. */
std::vector<Scalar> sample_wide_point(std::mt19937_64& rng, std::size_t d);

enum class VerifyMode { Sampled, GoodSet, Exact };
std::string to_string(VerifyMode m);
VerifyMode verify_mode_from_string(const std::string& s);

struct BoundCheck {
    std::string name;
    std::string measured;
    std::string bound;
    bool pass = true;
};

struct VerificationReport {
    VerifyMode mode = VerifyMode::Sampled;
    uint64_t seed = 0;
    std::string compiled_kind;
    uint64_t samples = 0;
    uint64_t failures = 0;
    double failure_fraction = 0;
    /** Largest |error| over samples that did not fail. */
    Scalar max_error;
    /** Largest |error| over all samples. */
    Scalar max_error_all;
    double failure_threshold = 0;
    bool failure_ok = true;
    /** Good-set mode: every error within the layer-by-layer bound (5nB)^L A sqrt(d) / 2^c0. */
    bool error_bound_ok = true;
    std::string error_bound;
    NetStats target_stats, compiled_stats;
    std::vector<BoundCheck> bounds;
    /** Float backend diagnostics (never part of the verdict). */
    bool float_run = false;
    bool float_precision_unsafe = false;
    bool float_overflow = false;
    double float_max_error = 0;
    bool pass = false;
};

/**
 * Compares compiled against target on n_samples points drawn from seed.
 * Sampled: failure when |error| > eps; passes if the failure fraction is at most
 * delta + 3 sqrt(delta (1 - delta) / N). GoodSet: cell midpoints, every error must be <= eps.
 * Exact: wide rational points, outputs must be equal.
 * Structural bounds are checked according to the compiled network's provenance.
 * `workers` = 0 picks the hardware concurrency.
 */
VerificationReport verify(const Network& target, const Network& compiled, const CompileConfig& cfg,
                          uint64_t n_samples, uint64_t seed, VerifyMode mode, unsigned workers = 0);

/** Key-value text, one fact per line. */
std::string report_text(const VerificationReport& r);

/** Runs fn(i) for i in [0, n) on a small pool of threads. */
void parallel_for(uint64_t n, unsigned workers, const std::function<void(uint64_t)>& fn);

}  // namespace reludeep
