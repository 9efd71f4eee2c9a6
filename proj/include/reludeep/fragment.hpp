#pragma once

#include "reludeep/network.hpp"

#include <utility>
#include <vector>

namespace reludeep {

/** Sparse affine row: sum of coeff * wire plus a bias. */
struct Affine {
    std::vector<std::pair<uint32_t, Scalar>> terms;
    Scalar bias;
};

/** Row that copies one wire. */
Affine pass(uint32_t wire);
/** Row with only a constant. */
Affine constant(Scalar v);
/** Dense layer from sparse rows over `cols` input wires. */
Layer make_layer(std::size_t cols, const std::vector<Affine>& rows, Activation act = Activation::ReLU);

/**
 * Open network piece: `in` inputs, `out` outputs, hidden layers ReLU and the
 * last layer ReLU or identity. Output wires carry a nonnegativity tag.
 */
class Fragment {
public:
    Fragment(std::size_t in, std::vector<Layer> layers, std::size_t declared_width, uint64_t declared_depth);
    Fragment(std::size_t in, std::vector<std::shared_ptr<const Layer>> layers, std::size_t declared_width,
             uint64_t declared_depth);

    std::size_t input_arity() const { return in_; }
    std::size_t output_arity() const;
    const std::vector<std::shared_ptr<const Layer>>& layers() const { return layers_; }
    std::size_t declared_width() const { return declared_width_; }
    uint64_t declared_depth() const { return declared_depth_; }
    /** max(input arity, every layer's row count). */
    std::size_t measured_width() const;
    uint64_t measured_depth() const { return layers_.size(); }
    /** Outputs of a ReLU last layer are nonnegative; identity outputs have unknown sign. */
    bool output_nonneg() const;

    std::vector<Scalar> evaluate(const std::vector<Scalar>& x) const;

private:
    std::size_t in_;
    std::vector<std::shared_ptr<const Layer>> layers_;
    std::size_t declared_width_;
    uint64_t declared_depth_;
};

/**
 * f then g. If f ends in an identity layer, its outputs are split into
 * (relu(z), relu(-z)) pairs and recombined inside g's first layer so depth
 * stays additive; with `merge_seam` the two affine maps are fused instead.
 */
Fragment compose(const Fragment& f, const Fragment& g, bool merge_seam = false);

/**
 * f and g side by side on disjoint inputs. The shallower side is padded with
 * single-neuron identity layers (nonnegative wires) or relu pairs (identity-ended side).
 * If exactly one side ends in an identity layer, the result ends in one too, which can
 * add a layer to the relu-ended side.
 */
Fragment parallel(const Fragment& f, const Fragment& g);

/**
 * Like parallel, but both fragments read the same inputs.
 * Requires equal input arity.
 */
Fragment parallel_shared(const Fragment& f, const Fragment& g);

/** k known-nonnegative wires passed through one ReLU neuron each. The caller guarantees nonnegativity. */
Fragment identity_pass(std::size_t k);

/** Closes a fragment into a Network, appending an identity output layer if the last layer is ReLU. */
Network wrap(const Fragment& f, std::string name = "", Provenance prov = Provenance::Target);

/** Layer list accumulated wire by wire; the last `carry` wires are passed through every emitted layer. */
class Tape {
public:
    explicit Tape(std::size_t width) : width_(width) {}

    std::size_t width() const { return width_; }
    /** Wires owned by the current gadget (width minus carried wires). */
    std::size_t own() const { return width_ - carry_; }
    std::size_t carry() const { return carry_; }
    void set_carry(std::size_t k);
    /** Emits `own_rows` followed by pass-through rows for the carried wires. */
    void emit(const std::vector<Affine>& own_rows, Activation act = Activation::ReLU);
    /** Index of the k-th carried wire in the current layer. */
    uint32_t carried(std::size_t k) const { return static_cast<uint32_t>(own() + k); }

    std::size_t max_width() const { return max_width_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer> take() { return std::move(layers_); }

private:
    std::size_t width_;
    std::size_t carry_ = 0;
    std::size_t max_width_ = 0;
    std::vector<Layer> layers_;
};

}  // namespace reludeep
