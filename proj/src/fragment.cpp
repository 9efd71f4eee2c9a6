#include "reludeep/fragment.hpp"

#include <stdexcept>

namespace reludeep {

Affine pass(uint32_t wire) { return Affine{{{wire, Scalar(1)}}, Scalar()}; }

Affine constant(Scalar v) { return Affine{{}, std::move(v)}; }

Layer make_layer(std::size_t cols, const std::vector<Affine>& rows, Activation act) {
    std::vector<Scalar> w(rows.size() * cols);
    std::vector<Scalar> b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (const auto& [c, v] : rows[r].terms) {
            if (c >= cols)
                throw StructureError("row " + std::to_string(r) + " reads wire " + std::to_string(c) + " of " +
                                     std::to_string(cols));
            w[r * cols + c] += v;
        }
        b[r] = rows[r].bias;
    }
    return Layer(rows.size(), cols, std::move(w), std::move(b), act);
}

namespace {

std::vector<std::shared_ptr<const Layer>> share(std::vector<Layer> layers) {
    std::vector<std::shared_ptr<const Layer>> out;
    out.reserve(layers.size());
    for (auto& l : layers) out.push_back(std::make_shared<const Layer>(std::move(l)));
    return out;
}

Layer identity_layer(std::size_t k, Activation act) {
    std::vector<Affine> rows;
    for (std::size_t i = 0; i < k; ++i) rows.push_back(pass(static_cast<uint32_t>(i)));
    return make_layer(k, rows, act);
}

// [W; -W] with ReLU: the (relu(z), relu(-z)) split of an affine layer.
Layer split_layer(const Layer& L) {
    std::size_t r = L.rows(), c = L.cols();
    std::vector<Scalar> w(2 * r * c), b(2 * r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            w[i * c + j] = L.w(i, j);
            w[(r + i) * c + j] = -L.w(i, j);
        }
        b[i] = L.b(i);
        b[r + i] = -L.b(i);
    }
    return Layer(2 * r, c, std::move(w), std::move(b), Activation::ReLU);
}

// Columns of L read z; rewrite them to read (relu(z), relu(-z)).
Layer unsplit_columns(const Layer& L) {
    std::size_t r = L.rows(), c = L.cols();
    std::vector<Scalar> w(r * 2 * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            w[i * 2 * c + j] = L.w(i, j);
            w[i * 2 * c + c + j] = -L.w(i, j);
        }
    return Layer(r, 2 * c, std::move(w), L.bias(), L.activation());
}

Layer merge_affine(const Layer& first, const Layer& second) {
    std::size_t r = second.rows(), m = second.cols(), c = first.cols();
    std::vector<Scalar> w(r * c), b(r);
    for (std::size_t i = 0; i < r; ++i) {
        b[i] = second.b(i);
        for (uint32_t k : second.row_support(i)) {
            b[i].add_product(second.w(i, k), first.b(k));
            for (uint32_t j : first.row_support(k)) w[i * c + j].add_product(second.w(i, k), first.w(k, j));
        }
    }
    (void)m;
    return Layer(r, c, std::move(w), std::move(b), second.activation());
}

Layer block_diag(const Layer& A, const Layer& B, bool shared_cols) {
    if (A.activation() != B.activation())
        throw StructureError("cannot place layers with different activations side by side");
    std::size_t r = A.rows() + B.rows();
    std::size_t c = shared_cols ? A.cols() : A.cols() + B.cols();
    std::size_t boff = shared_cols ? 0 : A.cols();
    std::vector<Scalar> w(r * c), b(r);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        for (uint32_t j : A.row_support(i)) w[i * c + j] = A.w(i, j);
        b[i] = A.b(i);
    }
    for (std::size_t i = 0; i < B.rows(); ++i) {
        for (uint32_t j : B.row_support(i)) w[(A.rows() + i) * c + boff + j] = B.w(i, j);
        b[A.rows() + i] = B.b(i);
    }
    return Layer(r, c, std::move(w), std::move(b), A.activation());
}

// Pads f to `depth` layers without changing its function.
std::vector<std::shared_ptr<const Layer>> padded(const Fragment& f, uint64_t depth) {
    auto layers = f.layers();
    uint64_t extra = depth - layers.size();
    if (extra == 0) return layers;
    std::size_t k = f.output_arity();
    if (f.output_nonneg()) {
        auto id = std::make_shared<const Layer>(identity_layer(k, Activation::ReLU));
        for (uint64_t i = 0; i < extra; ++i) layers.push_back(id);
        return layers;
    }
    layers.back() = std::make_shared<const Layer>(split_layer(*layers.back()));
    auto id2 = std::make_shared<const Layer>(identity_layer(2 * k, Activation::ReLU));
    for (uint64_t i = 0; i + 1 < extra; ++i) layers.push_back(id2);
    layers.push_back(std::make_shared<const Layer>(unsplit_columns(identity_layer(k, Activation::Identity))));
    return layers;
}

Fragment side_by_side(const Fragment& f, const Fragment& g, bool shared) {
    if (shared && f.input_arity() != g.input_arity())
        throw StructureError("shared-input parallel needs equal input arity");
    uint64_t depth = std::max(f.measured_depth(), g.measured_depth());
    std::vector<std::shared_ptr<const Layer>> lf, lg;
    if (f.output_nonneg() == g.output_nonneg()) {
        lf = padded(f, depth);
        lg = padded(g, depth);
    } else {
        // one side ends affine: finish both with an identity layer, the relu side passing its wires
        const Fragment& r = f.output_nonneg() ? f : g;
        const Fragment& a = f.output_nonneg() ? g : f;
        depth = std::max(r.measured_depth() + 1, a.measured_depth());
        auto lr = padded(r, depth - 1);
        lr.push_back(std::make_shared<const Layer>(identity_layer(r.output_arity(), Activation::Identity)));
        auto la = padded(a, depth);
        lf = f.output_nonneg() ? lr : la;
        lg = f.output_nonneg() ? la : lr;
    }
    std::vector<std::shared_ptr<const Layer>> out;
    for (uint64_t i = 0; i < depth; ++i)
        out.push_back(std::make_shared<const Layer>(block_diag(*lf[i], *lg[i], shared && i == 0)));
    std::size_t in = shared ? f.input_arity() : f.input_arity() + g.input_arity();
    Fragment res(in, out, 0, depth);
    return Fragment(in, out, res.measured_width(), depth);
}

}  // namespace

Fragment::Fragment(std::size_t in, std::vector<Layer> layers, std::size_t declared_width, uint64_t declared_depth)
    : Fragment(in, share(std::move(layers)), declared_width, declared_depth) {}

Fragment::Fragment(std::size_t in, std::vector<std::shared_ptr<const Layer>> layers, std::size_t declared_width,
                   uint64_t declared_depth)
    : in_(in), layers_(std::move(layers)), declared_width_(declared_width), declared_depth_(declared_depth) {
    if (layers_.empty()) throw StructureError("fragment needs at least one layer");
    std::size_t expect = in_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i]->cols() != expect)
            throw StructureError("fragment layer " + std::to_string(i + 1) + " expects " +
                                 std::to_string(layers_[i]->cols()) + " inputs but receives " +
                                 std::to_string(expect));
        if (i + 1 < layers_.size() && layers_[i]->activation() != Activation::ReLU)
            throw StructureError("fragment layer " + std::to_string(i + 1) + " is hidden and must be ReLU");
        expect = layers_[i]->rows();
    }
}

std::size_t Fragment::output_arity() const { return layers_.back()->rows(); }

bool Fragment::output_nonneg() const { return layers_.back()->activation() == Activation::ReLU; }

std::size_t Fragment::measured_width() const {
    std::size_t w = in_;
    for (const auto& l : layers_) w = std::max(w, l->rows());
    return w;
}

std::vector<Scalar> Fragment::evaluate(const std::vector<Scalar>& x) const {
    if (x.size() != in_)
        throw StructureError("fragment input has " + std::to_string(x.size()) + " values, expected " +
                             std::to_string(in_));
    std::vector<Scalar> cur = x, next;
    for (const auto& lp : layers_) {
        const Layer& L = *lp;
        next.assign(L.rows(), Scalar());
        for (std::size_t r = 0; r < L.rows(); ++r) {
            Scalar acc = L.b(r);
            for (uint32_t c : L.row_support(r)) acc.add_product(L.w(r, c), cur[c]);
            if (L.activation() == Activation::ReLU) acc.relu();
            next[r] = std::move(acc);
        }
        cur.swap(next);
    }
    return cur;
}

Fragment compose(const Fragment& f, const Fragment& g, bool merge_seam) {
    if (f.output_arity() != g.input_arity())
        throw StructureError("compose: first fragment has " + std::to_string(f.output_arity()) +
                             " outputs, second expects " + std::to_string(g.input_arity()));
    std::vector<std::shared_ptr<const Layer>> layers = f.layers();
    std::size_t width = std::max(f.declared_width(), g.declared_width());
    uint64_t depth = f.declared_depth() + g.declared_depth();
    auto rest = g.layers();
    if (f.output_nonneg()) {
        layers.insert(layers.end(), rest.begin(), rest.end());
    } else if (merge_seam) {
        auto merged = std::make_shared<const Layer>(merge_affine(*layers.back(), *rest.front()));
        layers.back() = merged;
        layers.insert(layers.end(), rest.begin() + 1, rest.end());
        depth -= 1;
    } else {
        layers.back() = std::make_shared<const Layer>(split_layer(*layers.back()));
        rest.front() = std::make_shared<const Layer>(unsplit_columns(*rest.front()));
        layers.insert(layers.end(), rest.begin(), rest.end());
        width = std::max(width, 2 * f.output_arity());
    }
    return Fragment(f.input_arity(), std::move(layers), width, depth);
}

Fragment parallel(const Fragment& f, const Fragment& g) { return side_by_side(f, g, false); }

Fragment parallel_shared(const Fragment& f, const Fragment& g) { return side_by_side(f, g, true); }

Fragment identity_pass(std::size_t k) {
    if (k == 0) throw StructureError("identity_pass needs at least one wire");
    std::vector<Layer> layers;
    layers.push_back(identity_layer(k, Activation::ReLU));
    return Fragment(k, std::move(layers), k, 1);
}

Network wrap(const Fragment& f, std::string name, Provenance prov) {
    Network net(f.input_arity(), std::move(name), prov);
    for (const auto& l : f.layers()) net.push(l);
    if (f.output_nonneg()) net.push(identity_layer(f.output_arity(), Activation::Identity));
    net.validate();
    return net;
}

void Tape::set_carry(std::size_t k) {
    if (k > width_) throw StructureError("cannot carry more wires than are live");
    carry_ = k;
}

void Tape::emit(const std::vector<Affine>& own_rows, Activation act) {
    if (max_width_ == 0) max_width_ = width_;
    std::vector<Affine> rows = own_rows;
    for (std::size_t k = 0; k < carry_; ++k) rows.push_back(pass(carried(k)));
    layers_.push_back(make_layer(width_, rows, act));
    width_ = rows.size();
    max_width_ = std::max(max_width_, width_);
}

}  // namespace reludeep
