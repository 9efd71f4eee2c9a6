#include "reludeep/network.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace reludeep {

ParseError::ParseError(std::size_t line_no, std::string fld, const std::string& what)
    : std::runtime_error("line " + std::to_string(line_no) + " (" + fld + "): " + what),
      line(line_no),
      field(std::move(fld)) {}

Layer::Layer(std::size_t rows, std::size_t cols, std::vector<Scalar> weights, std::vector<Scalar> bias,
             Activation act)
    : rows_(rows), cols_(cols), w_(std::move(weights)), b_(std::move(bias)), act_(act) {
    if (rows_ == 0 || cols_ == 0) throw StructureError("layer with zero rows or columns");
    if (w_.size() != rows_ * cols_)
        throw StructureError("weight matrix has " + std::to_string(w_.size()) + " entries, expected " +
                             std::to_string(rows_ * cols_));
    if (b_.size() != rows_)
        throw StructureError("bias length " + std::to_string(b_.size()) + " != row count " +
                             std::to_string(rows_));
    support_.resize(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            if (!w_[r * cols_ + c].is_zero()) support_[r].push_back(static_cast<uint32_t>(c));
    if (act_ == Activation::ReLU && rows_ == cols_) {
        nonneg_diag_ = true;
        for (std::size_t r = 0; r < rows_ && nonneg_diag_; ++r) {
            if (!b_[r].is_zero()) nonneg_diag_ = false;
            for (uint32_t c : support_[r])
                if (c != r || w(r, c).sign() < 0) nonneg_diag_ = false;
        }
    }
}

Layer Layer::with_activation(Activation act) const { return Layer(rows_, cols_, w_, b_, act); }

bool operator==(const Layer& a, const Layer& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.act_ == b.act_ && a.w_ == b.w_ && a.b_ == b.b_;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Target: return "target";
        case Provenance::CompiledNarrow: return "compiled-narrow";
        case Provenance::CompiledMinwidth: return "compiled-minwidth";
        case Provenance::CompiledExact: return "compiled-exact";
        case Provenance::CompiledBounded: return "compiled-bounded";
    }
    return "target";
}

Provenance provenance_from_string(const std::string& s) {
    for (Provenance p : {Provenance::Target, Provenance::CompiledNarrow, Provenance::CompiledMinwidth,
                         Provenance::CompiledExact, Provenance::CompiledBounded})
        if (to_string(p) == s) return p;
    throw std::invalid_argument("unknown provenance '" + s + "'");
}

Network::Network(std::size_t d, std::string name, Provenance prov) : d_(d), name_(std::move(name)), prov_(prov) {
    if (d_ == 0) throw StructureError("input dimension must be positive");
}

std::size_t Network::output_dim() const {
    return runs_.empty() ? d_ : runs_.back().layer->rows();
}

const Layer& Network::layer(uint64_t i) const {
    for (const auto& run : runs_) {
        if (i < run.count) return *run.layer;
        i -= run.count;
    }
    throw std::out_of_range("layer index out of range");
}

void Network::push(Layer layer, uint64_t count) {
    push(std::make_shared<const Layer>(std::move(layer)), count);
}

void Network::push(std::shared_ptr<const Layer> layer, uint64_t count) {
    if (count == 0) return;
    std::size_t expect = output_dim();
    if (layer->cols() != expect)
        throw StructureError("layer " + std::to_string(depth_ + 1) + " expects " + std::to_string(layer->cols()) +
                             " inputs but receives " + std::to_string(expect));
    if (!runs_.empty() && runs_.back().layer == layer) {
        runs_.back().count += count;
    } else {
        runs_.push_back({std::move(layer), count});
    }
    depth_ += count;
}

void Network::validate() const {
    if (runs_.empty()) throw StructureError("network has no layers");
    uint64_t idx = 0;
    for (std::size_t k = 0; k < runs_.size(); ++k) {
        const auto& run = runs_[k];
        bool last_run = k + 1 == runs_.size();
        for (uint64_t j = 0; j < run.count; ++j, ++idx) {
            bool last = last_run && j + 1 == run.count;
            Activation want = last ? Activation::Identity : Activation::ReLU;
            if (run.layer->activation() != want)
                throw StructureError("layer " + std::to_string(idx + 1) +
                                     (last ? " is the output layer and must be identity"
                                           : " is hidden and must be ReLU"));
        }
    }
}

NetStats stats(const Network& net) {
    NetStats s;
    s.width = net.input_dim();
    s.depth = net.depth();
    const auto& runs = net.runs();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const Layer& L = *runs[k].layer;
        bool has_output = k + 1 == runs.size();
        // The output layer's size is not a hidden width.
        if (!has_output || runs[k].count > 1) s.width = std::max(s.width, L.rows());
        s.params += runs[k].count * (L.rows() * L.cols() + L.rows());
        auto consider = [&](const Scalar& v) {
            if (v.is_zero()) return;
            Scalar a = v.abs();
            if (a > s.max_abs_weight) s.max_abs_weight = a;
            s.max_bits = std::max({s.max_bits, v.num_bits(), v.den_bits()});
        };
        for (const auto& v : L.weights()) consider(v);
        for (const auto& v : L.bias()) consider(v);
    }
    return s;
}

namespace {

void check_input(const Network& net, std::size_t n) {
    if (n != net.input_dim())
        throw StructureError("input has " + std::to_string(n) + " coordinates, layer 1 expects " +
                             std::to_string(net.input_dim()));
    if (net.runs().empty()) throw StructureError("network has no layers");
}

void apply_layer(const Layer& L, const std::vector<Scalar>& in, std::vector<Scalar>& out) {
    out.resize(L.rows());
    for (std::size_t r = 0; r < L.rows(); ++r) {
        Scalar& acc = out[r];
        acc = L.b(r);
        for (uint32_t c : L.row_support(r)) acc.add_product(L.w(r, c), in[c]);
        if (L.activation() == Activation::ReLU) acc.relu();
    }
}

// Applies `count` copies of a nonnegative diagonal layer to nonnegative input in one step.
void apply_diagonal_power(const Layer& L, uint64_t count, std::vector<Scalar>& v) {
    for (std::size_t r = 0; r < L.rows(); ++r) {
        const Scalar& w = L.w(r, r);
        if (w.is_zero()) {
            v[r].set_zero();
        } else if (w.is_pow2_magnitude()) {
            v[r].shift(w.exp2() * static_cast<int64_t>(count));
        } else {
            for (uint64_t j = 0; j < count; ++j) v[r] *= w;
        }
    }
}

}  // namespace

std::vector<Scalar> evaluate(const Network& net, const std::vector<Scalar>& x) {
    check_input(net, x.size());
    std::vector<Scalar> cur = x, next;
    bool nonneg = false;  // whether `cur` is known to be componentwise >= 0
    for (const auto& run : net.runs()) {
        const Layer& L = *run.layer;
        uint64_t left = run.count;
        if (L.is_nonneg_diagonal() && left > 1) {
            if (!nonneg) {
                apply_layer(L, cur, next);
                cur.swap(next);
                --left;
            }
            apply_diagonal_power(L, left, cur);
            left = 0;
        }
        for (; left > 0; --left) {
            apply_layer(L, cur, next);
            cur.swap(next);
        }
        nonneg = L.activation() == Activation::ReLU;
    }
    return cur;
}

std::vector<std::vector<Scalar>> evaluate_trace(const Network& net, const std::vector<Scalar>& x) {
    check_input(net, x.size());
    std::vector<std::vector<Scalar>> trace;
    std::vector<Scalar> cur = x, next;
    for (const auto& run : net.runs()) {
        for (uint64_t j = 0; j < run.count; ++j) {
            apply_layer(*run.layer, cur, next);
            cur.swap(next);
            trace.push_back(cur);
        }
    }
    return trace;
}

FloatResult evaluate_float(const Network& net, const std::vector<double>& x) {
    check_input(net, x.size());
    FloatResult res;
    std::vector<double> cur = x, next;
    for (const auto& run : net.runs()) {
        const Layer& L = *run.layer;
        std::vector<double> w(L.weights().size()), b(L.rows());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const Scalar& s = L.weights()[i];
            w[i] = s.to_double();
            if (s.num_bits() > 50 || s.den_bits() > 50) res.precision_unsafe = true;
        }
        for (std::size_t r = 0; r < L.rows(); ++r) {
            b[r] = L.b(r).to_double();
            if (L.b(r).num_bits() > 50 || L.b(r).den_bits() > 50) res.precision_unsafe = true;
        }
        for (uint64_t j = 0; j < run.count; ++j) {
            next.assign(L.rows(), 0.0);
            for (std::size_t r = 0; r < L.rows(); ++r) {
                double acc = b[r];
                for (uint32_t c : L.row_support(r)) acc += w[r * L.cols() + c] * cur[c];
                if (L.activation() == Activation::ReLU && acc < 0) acc = 0;
                next[r] = acc;
            }
            cur.swap(next);
            for (double v : cur)
                if (!std::isfinite(v)) res.overflow = true;
            if (res.overflow) break;
        }
        if (res.overflow) break;
    }
    res.y = cur;
    return res;
}

// RELUNET v1:
//   RELUNET v1
//   name <text>
//   provenance <tag>
//   input <d>
//   runs <k>
//   layer <rows> <cols> <relu|identity> <repeat>
//   w <cols numbers>      (rows times)
//   b <rows numbers>
//   end
void serialize(const Network& net, std::ostream& os) {
    os << "RELUNET v1\n";
    os << "name " << net.name() << "\n";
    os << "provenance " << to_string(net.provenance()) << "\n";
    os << "input " << net.input_dim() << "\n";
    os << "runs " << net.runs().size() << "\n";
    for (const auto& run : net.runs()) {
        const Layer& L = *run.layer;
        os << "layer " << L.rows() << " " << L.cols() << " "
           << (L.activation() == Activation::ReLU ? "relu" : "identity") << " " << run.count << "\n";
        for (std::size_t r = 0; r < L.rows(); ++r) {
            os << "w";
            for (std::size_t c = 0; c < L.cols(); ++c) os << " " << L.w(r, c);
            os << "\n";
        }
        os << "b";
        for (std::size_t r = 0; r < L.rows(); ++r) os << " " << L.b(r);
        os << "\n";
    }
    os << "end\n";
}

std::string serialize(const Network& net) {
    std::ostringstream os;
    serialize(net, os);
    return os.str();
}

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    // Next non-empty line split into tokens; the first token is checked against `key`.
    std::vector<std::string> expect(const std::string& key) {
        std::string line;
        while (std::getline(is_, line)) {
            ++no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            last_ = line;
            std::istringstream ss(line);
            std::vector<std::string> tok;
            for (std::string t; ss >> t;) tok.push_back(t);
            if (tok[0] != key) throw ParseError(no_, key, "expected '" + key + "', found '" + tok[0] + "'");
            return tok;
        }
        throw ParseError(no_ + 1, key, "unexpected end of input");
    }
    std::size_t line() const { return no_; }
    const std::string& raw() const { return last_; }

private:
    std::istream& is_;
    std::size_t no_ = 0;
    std::string last_;
};

uint64_t parse_count(const std::string& s, std::size_t line, const std::string& field) {
    try {
        std::size_t pos = 0;
        if (s.empty() || s[0] == '-') throw std::invalid_argument("negative");
        unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, field, "expected a nonnegative integer, found '" + s + "'");
    }
}

}  // namespace

Network deserialize(std::istream& is) {
    LineReader rd(is);
    auto hdr = rd.expect("RELUNET");
    if (hdr.size() != 2 || hdr[1] != "v1") throw ParseError(rd.line(), "header", "unsupported version");
    rd.expect("name");
    std::string name = rd.raw().size() > 5 ? rd.raw().substr(5) : "";
    auto pv = rd.expect("provenance");
    if (pv.size() != 2) throw ParseError(rd.line(), "provenance", "expected one tag");
    Provenance prov;
    try {
        prov = provenance_from_string(pv[1]);
    } catch (const std::invalid_argument& e) {
        throw ParseError(rd.line(), "provenance", e.what());
    }
    auto in = rd.expect("input");
    if (in.size() != 2) throw ParseError(rd.line(), "input", "expected one value");
    uint64_t d = parse_count(in[1], rd.line(), "input");
    if (d == 0) throw ParseError(rd.line(), "input", "input dimension must be positive");
    auto rn = rd.expect("runs");
    if (rn.size() != 2) throw ParseError(rd.line(), "runs", "expected one value");
    uint64_t nruns = parse_count(rn[1], rd.line(), "runs");

    Network net(d, name, prov);
    for (uint64_t k = 0; k < nruns; ++k) {
        auto lt = rd.expect("layer");
        if (lt.size() != 5) throw ParseError(rd.line(), "layer", "expected rows cols activation repeat");
        uint64_t rows = parse_count(lt[1], rd.line(), "rows");
        uint64_t cols = parse_count(lt[2], rd.line(), "cols");
        Activation act;
        if (lt[3] == "relu")
            act = Activation::ReLU;
        else if (lt[3] == "identity")
            act = Activation::Identity;
        else
            throw ParseError(rd.line(), "activation", "unknown activation '" + lt[3] + "'");
        uint64_t rep = parse_count(lt[4], rd.line(), "repeat");
        if (rows == 0 || cols == 0 || rep == 0)
            throw ParseError(rd.line(), "layer", "rows, cols and repeat must be positive");
        std::size_t layer_line = rd.line();
        std::vector<Scalar> w;
        w.reserve(rows * cols);
        for (uint64_t r = 0; r < rows; ++r) {
            auto row = rd.expect("w");
            if (row.size() != cols + 1)
                throw ParseError(rd.line(), "w", "expected " + std::to_string(cols) + " entries, found " +
                                                     std::to_string(row.size() - 1));
            for (uint64_t c = 0; c < cols; ++c) {
                try {
                    w.push_back(Scalar::parse(row[c + 1]));
                } catch (const std::exception& e) {
                    throw ParseError(rd.line(), "w[" + std::to_string(c + 1) + "]", e.what());
                }
            }
        }
        auto brow = rd.expect("b");
        if (brow.size() != rows + 1)
            throw ParseError(rd.line(), "b", "expected " + std::to_string(rows) + " entries, found " +
                                                 std::to_string(brow.size() - 1));
        std::vector<Scalar> b;
        for (uint64_t r = 0; r < rows; ++r) {
            try {
                b.push_back(Scalar::parse(brow[r + 1]));
            } catch (const std::exception& e) {
                throw ParseError(rd.line(), "b[" + std::to_string(r + 1) + "]", e.what());
            }
        }
        try {
            net.push(Layer(rows, cols, std::move(w), std::move(b), act), rep);
        } catch (const StructureError& e) {
            throw ParseError(layer_line, "layer", e.what());
        }
    }
    rd.expect("end");
    try {
        net.validate();
    } catch (const StructureError& e) {
        throw ParseError(rd.line(), "network", e.what());
    }
    return net;
}

Network deserialize(const std::string& text) {
    std::istringstream is(text);
    return deserialize(is);
}

Network load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return deserialize(f);
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    serialize(net, f);
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace reludeep
