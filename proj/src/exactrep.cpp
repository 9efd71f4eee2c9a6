#include "reludeep/exactrep.hpp"

#include "reludeep/config.hpp"
#include "reludeep/fragment.hpp"

namespace reludeep {

namespace {

// Nonnegative affine bound of |g(x)| in terms of |x_i|: sum_i coef_i |x_i| + konst.
struct Bound {
    std::vector<Scalar> coef;
    Scalar konst;
};

class ExactBuilder {
public:
    explicit ExactBuilder(const Network& target) : net_(target), d_(target.input_dim()), tape_(target.input_dim()) {
        // bounds for every hidden neuron
        for (uint64_t l = 0; l + 1 < net_.depth(); ++l) {
            const Layer& L = net_.layer(l);
            std::vector<Bound> layer;
            for (std::size_t k = 0; k < L.rows(); ++k) {
                Bound b{std::vector<Scalar>(d_), L.b(k).abs()};
                for (std::size_t j = 0; j < L.cols(); ++j) {
                    Scalar w = L.w(k, j).abs();
                    if (w.is_zero()) continue;
                    if (l == 0) {
                        b.coef[j] += w;
                    } else {
                        const Bound& prev = bounds_[l - 1][j];
                        for (std::size_t i = 0; i < d_; ++i) b.coef[i].add_product(w, prev.coef[i]);
                        b.konst.add_product(w, prev.konst);
                    }
                }
                layer.push_back(std::move(b));
            }
            bounds_.push_back(std::move(layer));
        }
    }

    Network build() {
        // relu(x), relu(-x)
        std::vector<Affine> rows;
        for (std::size_t i = 0; i < d_; ++i) rows.push_back(pass(static_cast<uint32_t>(i)));
        for (std::size_t i = 0; i < d_; ++i) rows.push_back(Affine{{{static_cast<uint32_t>(i), Scalar(-1)}}, Scalar()});
        tape_.emit(rows);

        const Layer& out = net_.layer(net_.depth() - 1);
        std::vector<std::vector<Scalar>> U(out.rows(), std::vector<Scalar>(out.cols()));
        for (std::size_t r = 0; r < out.rows(); ++r)
            for (std::size_t k = 0; k < out.cols(); ++k) U[r][k] = out.w(r, k);
        std::vector<Affine> outer;
        std::vector<Affine> V = block(net_.depth() - 1, U, outer);
        for (std::size_t r = 0; r < V.size(); ++r) V[r].bias += out.b(r);
        tape_.emit(V, Activation::Identity);

        Network res(d_, net_.name().empty() ? "" : net_.name() + "-exact", Provenance::CompiledExact);
        for (auto& l : tape_.take()) res.push(std::move(l));
        res.validate();
        return res;
    }

private:
    // x_i = relu(x_i) - relu(-x_i), read from the first 2d wires
    Affine input(std::size_t i) const {
        return Affine{{{static_cast<uint32_t>(i), Scalar(1)}, {static_cast<uint32_t>(d_ + i), Scalar(-1)}}, Scalar()};
    }

    // sum_i coef_i (relu(x_i) + relu(-x_i)) + konst
    Affine bound_affine(const Bound& b) const {
        Affine a;
        for (std::size_t i = 0; i < d_; ++i) {
            if (b.coef[i].is_zero()) continue;
            a.terms.emplace_back(static_cast<uint32_t>(i), b.coef[i]);
            a.terms.emplace_back(static_cast<uint32_t>(d_ + i), b.coef[i]);
        }
        a.bias = b.konst;
        return a;
    }

    static void axpy(Affine& y, const Scalar& a, const Affine& x) {
        if (a.is_zero()) return;
        for (const auto& [w, v] : x.terms) y.terms.emplace_back(w, v * a);
        y.bias.add_product(a, x.bias);
    }

    // Emits [sigma wires, outer..., own...]; outer and own become plain wires afterwards.
    void emit(std::vector<Affine>& outer, std::vector<Affine>& own) {
        std::vector<Affine> rows;
        for (std::size_t i = 0; i < 2 * d_; ++i) rows.push_back(pass(static_cast<uint32_t>(i)));
        rows.insert(rows.end(), outer.begin(), outer.end());
        rows.insert(rows.end(), own.begin(), own.end());
        tape_.emit(rows);
        auto w = static_cast<uint32_t>(2 * d_);
        for (auto& a : outer) a = pass(w++);
        for (auto& a : own) a = pass(w++);
    }

    /*
     * Layers computing V_r = sum_k U[r][k] relu(g_k(x)) over the neurons of target layer `level`
     * (1-based). Each partial sum is kept nonnegative by adding |U[r][k]| times the bound
     * of relu(g_k) whenever U[r][k] < 0; the total added bound is subtracted in V.
     */
    std::vector<Affine> block(uint64_t level, const std::vector<std::vector<Scalar>>& U, std::vector<Affine>& outer) {
        const Layer& L = net_.layer(level - 1);
        const std::size_t m = U.size();
        std::vector<Affine> acc(m, constant(Scalar()));
        std::vector<Bound> added(m, Bound{std::vector<Scalar>(d_), Scalar()});
        auto accumulate = [&](std::size_t k, uint32_t t_wire) {
            const Bound& bk = bounds_[level - 1][k];
            for (std::size_t r = 0; r < m; ++r) {
                const Scalar& u = U[r][k];
                axpy(acc[r], u, pass(t_wire));
                if (u.sign() < 0) {
                    Scalar a = u.abs();
                    axpy(acc[r], a, bound_affine(bk));
                    for (std::size_t i = 0; i < d_; ++i) added[r].coef[i].add_product(a, bk.coef[i]);
                    added[r].konst.add_product(a, bk.konst);
                }
            }
        };
        for (std::size_t k = 0; k < L.rows(); ++k) {
            Affine g;
            if (level == 1) {
                for (std::size_t j = 0; j < L.cols(); ++j) axpy(g, L.w(k, j), input(j));
                g.bias += L.b(k);
                std::vector<Affine> own = acc;
                own.push_back(g);
                emit(outer, own);
                acc.assign(own.begin(), own.begin() + static_cast<long>(m));
                accumulate(k, static_cast<uint32_t>(2 * d_ + outer.size() + m));
            } else {
                std::vector<std::vector<Scalar>> row(1, std::vector<Scalar>(L.cols()));
                for (std::size_t j = 0; j < L.cols(); ++j) row[0][j] = L.w(k, j);
                std::vector<Affine> inner_outer = outer;
                inner_outer.insert(inner_outer.end(), acc.begin(), acc.end());
                std::vector<Affine> v = block(level - 1, row, inner_outer);
                outer.assign(inner_outer.begin(), inner_outer.begin() + static_cast<long>(outer.size()));
                acc.assign(inner_outer.begin() + static_cast<long>(outer.size()), inner_outer.end());
                v[0].bias += L.b(k);
                std::vector<Affine> own = acc;
                own.push_back(v[0]);
                emit(outer, own);
                acc.assign(own.begin(), own.begin() + static_cast<long>(m));
                accumulate(k, static_cast<uint32_t>(2 * d_ + outer.size() + m));
            }
        }
        std::vector<Affine> V = acc;
        for (std::size_t r = 0; r < m; ++r) axpy(V[r], Scalar(-1), bound_affine(added[r]));
        return V;
    }

    const Network& net_;
    std::size_t d_;
    Tape tape_;
    std::vector<std::vector<Bound>> bounds_;
};

}  // namespace

uint64_t exact_depth(const Network& target) {
    target.validate();
    if (target.depth() < 2) throw PreconditionError("exact construction needs at least one hidden layer");
    uint64_t D = target.layer(0).rows();
    const uint64_t cap = uint64_t(1) << 62;
    for (uint64_t l = 1; l + 1 < target.depth(); ++l) {
        uint64_t n = target.layer(l).rows();
        if (D + 1 > cap / n) return cap;
        D = n * (D + 1);
    }
    return D + 2;
}

Network exact_deep(const Network& target, uint64_t depth_ceiling) {
    uint64_t depth = exact_depth(target);
    if (depth > depth_ceiling)
        throw PreconditionError("exact construction would have depth " + std::to_string(depth) +
                                ", above the ceiling " + std::to_string(depth_ceiling));
    return ExactBuilder(target).build();
}

Network exact_two_layer(const Network& target) {
    target.validate();
    if (target.depth() != 2) throw PreconditionError("exact_two_layer needs a network of depth 2");
    return exact_deep(target);
}

EfficiencyReport efficiency_report(const Network& target, const Network& compiled) {
    EfficiencyReport r;
    r.target_params = stats(target).params;
    r.compiled_params = stats(compiled).params;
    r.ratio = r.target_params == 0 ? 0.0
                                   : static_cast<double>(r.compiled_params) / static_cast<double>(r.target_params);
    uint64_t L = target.depth();
    r.regime = L <= 2 ? "linear" : L == 3 ? "quadratic" : "blow-up";
    return r;
}

}  // namespace reludeep
