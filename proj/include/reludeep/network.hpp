#pragma once

#include "reludeep/scalar.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace reludeep {

enum class Activation { ReLU, Identity };

/** Structural problem with a network (bad dimensions, misplaced identity layer, ...). */
struct StructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Text-format problem; carries the 1-based line and the offending field. */
struct ParseError : std::runtime_error {
    ParseError(std::size_t line, std::string field, const std::string& what);
    std::size_t line;
    std::string field;
};

/**
 * One affine map followed by an activation: h' = act(W h + b).
 * Immutable once built; the nonzero pattern of each row is cached for evaluation.
 */
class Layer {
public:
    Layer(std::size_t rows, std::size_t cols, std::vector<Scalar> weights, std::vector<Scalar> bias,
          Activation act);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Activation activation() const { return act_; }
    const Scalar& w(std::size_t r, std::size_t c) const { return w_[r * cols_ + c]; }
    const Scalar& b(std::size_t r) const { return b_[r]; }
    const std::vector<Scalar>& weights() const { return w_; }
    const std::vector<Scalar>& bias() const { return b_; }

    /** Column indices of the nonzero entries of row r. */
    const std::vector<uint32_t>& row_support(std::size_t r) const { return support_[r]; }
    /**
     * ReLU layer with a square diagonal W of nonnegative entries and zero bias.
     * On nonnegative input it is the linear map diag(W).
     */
    bool is_nonneg_diagonal() const { return nonneg_diag_; }

    /** Same matrix and bias with a different activation. */
    Layer with_activation(Activation act) const;

    friend bool operator==(const Layer& a, const Layer& b);

private:
    std::size_t rows_, cols_;
    std::vector<Scalar> w_, b_;
    Activation act_;
    std::vector<std::vector<uint32_t>> support_;
    bool nonneg_diag_ = false;
};

enum class Provenance { Target, CompiledNarrow, CompiledMinwidth, CompiledExact, CompiledBounded };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/** A layer repeated `count` times in a row; repeated layers share storage. */
struct LayerRun {
    std::shared_ptr<const Layer> layer;
    uint64_t count;
};

/**
 * Layered ReLU network: d inputs, ReLU hidden layers and an identity output layer.
 * Consecutive identical layers are stored once with a repeat count.
 */
class Network {
public:
    Network() = default;
    Network(std::size_t d, std::string name = "", Provenance prov = Provenance::Target);

    std::size_t input_dim() const { return d_; }
    std::size_t output_dim() const;
    const std::string& name() const { return name_; }
    Provenance provenance() const { return prov_; }
    void set_name(std::string n) { name_ = std::move(n); }
    void set_provenance(Provenance p) { prov_ = p; }

    /** Number of layers, repeats included. */
    uint64_t depth() const { return depth_; }
    const std::vector<LayerRun>& runs() const { return runs_; }
    /** i-th layer (0-based), repeats expanded. */
    const Layer& layer(uint64_t i) const;

    /** Appends a layer; checks the dimension chain. */
    void push(Layer layer, uint64_t count = 1);
    void push(std::shared_ptr<const Layer> layer, uint64_t count = 1);

    /** Throws StructureError unless the activation pattern is ReLU...ReLU, Identity. */
    void validate() const;

private:
    std::size_t d_ = 0;
    std::string name_;
    Provenance prov_ = Provenance::Target;
    std::vector<LayerRun> runs_;
    uint64_t depth_ = 0;
};

struct NetStats {
    std::size_t width = 0;
    uint64_t depth = 0;
    uint64_t params = 0;
    Scalar max_abs_weight;
    uint64_t max_bits = 0;
};

NetStats stats(const Network& net);

/** Exact forward pass. */
std::vector<Scalar> evaluate(const Network& net, const std::vector<Scalar>& x);
/** Exact forward pass recording the output of every layer (repeats expanded). */
std::vector<std::vector<Scalar>> evaluate_trace(const Network& net, const std::vector<Scalar>& x);

struct FloatResult {
    std::vector<double> y;
    /** Some weight has more than 50 significant bits, so doubles cannot hold it. */
    bool precision_unsafe = false;
    /** An intermediate value overflowed to infinity or became NaN. */
    bool overflow = false;
};

/** Advisory double-precision forward pass. Never used to certify anything. */
FloatResult evaluate_float(const Network& net, const std::vector<double>& x);

/** RELUNET v1 text format. */
std::string serialize(const Network& net);
void serialize(const Network& net, std::ostream& os);
Network deserialize(const std::string& text);
Network deserialize(std::istream& is);

Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

}  // namespace reludeep
