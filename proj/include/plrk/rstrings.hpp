#pragma once

// R-string calculus: ordered integer tuples indexing the matrix words
// C^a Atilde^{+-1} ... that appear in the stage-error expansion, together
// with the operations that connect strings sharing the same matrix value.

#include "plrk/common.hpp"
#include "plrk/tableau.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace plrk {

/// Which index parity carries the no-adjacent-double-zero requirement.
/// R-strings use `even`; the companion multi-index family uses `odd`.
enum class Parity { even, odd };

class RString {
public:
    RString() = default;
    explicit RString(std::vector<int> entries) : e_(std::move(entries)) {
        for (int v : e_)
            if (v < 0) throw error("RString: negative entry");
    }
    RString(std::initializer_list<int> entries) : RString(std::vector<int>(entries)) {}

    int dim() const { return static_cast<int>(e_.size()); }
    int order() const { return std::accumulate(e_.begin(), e_.end(), 0); }
    /// 1-based entry access.
    int at(int i) const { return e_.at(i - 1); }
    const std::vector<int>& entries() const { return e_; }

    bool irreducible(Parity p = Parity::even) const {
        const int d = dim();
        const int start = (p == Parity::even) ? 2 : 1;
        for (int i = start; i + 1 <= d; i += 2)
            if (at(i) == 0 && at(i + 1) == 0) return false;
        return true;
    }

    std::string str() const {
        std::string out = "(";
        for (int i = 0; i < dim(); ++i) {
            if (i) out += ",";
            out += std::to_string(e_[i]);
        }
        return out + ")";
    }

    friend bool operator==(const RString& a, const RString& b) { return a.e_ == b.e_; }
    /// Canonical order: by dimension, then entrywise lexicographic.
    friend bool operator<(const RString& a, const RString& b) {
        if (a.dim() != b.dim()) return a.dim() < b.dim();
        return a.e_ < b.e_;
    }

private:
    std::vector<int> e_;
};

enum class StringOp {
    left_append,
    right_append,
    insertion,
    left_split,
    right_split,
    capping,
    left_diffusion,
    right_diffusion
};

inline std::string_view op_name(StringOp op) {
    switch (op) {
        case StringOp::left_append: return "left_append";
        case StringOp::right_append: return "right_append";
        case StringOp::insertion: return "insertion";
        case StringOp::left_split: return "left_split";
        case StringOp::right_split: return "right_split";
        case StringOp::capping: return "capping";
        case StringOp::left_diffusion: return "left_diffusion";
        case StringOp::right_diffusion: return "right_diffusion";
    }
    return "?";
}

namespace detail {
[[noreturn]] inline void fail_op(StringOp op, const std::string& why) {
    throw inapplicable_operation(std::string(op_name(op)) + ": " + why);
}
}  // namespace detail

/// Apply one operation at 1-based position `i` (ignored where positionless).
/// Side conditions follow the worked derivations: splits and diffusions act on
/// entries > 1, insertion places its zero pair at an odd position. The result
/// must come out irreducible.
inline RString apply(const RString& g, StringOp op, int i = 0) {
    const int d = g.dim();
    if (!g.irreducible()) detail::fail_op(op, "input string is reducible");
    std::vector<int> e = g.entries();
    std::vector<int> out;
    switch (op) {
        case StringOp::left_append:
            if (g.at(1) == 0) detail::fail_op(op, "leading entry is zero");
            out = {0, 0};
            out.insert(out.end(), e.begin(), e.end());
            break;
        case StringOp::right_append:
            if (g.at(d) == 0) detail::fail_op(op, "trailing entry is zero");
            out = e;
            out.push_back(0);
            out.push_back(0);
            break;
        case StringOp::insertion:
            if (i % 2 == 0 || i <= 1 || i > d) detail::fail_op(op, "position must be odd, in (1, dim]");
            if (g.at(i - 1) == 0 || g.at(i) == 0)
                detail::fail_op(op, "entries flanking the insertion point must be nonzero");
            out.assign(e.begin(), e.begin() + (i - 1));
            out.push_back(0);
            out.push_back(0);
            out.insert(out.end(), e.begin() + (i - 1), e.end());
            break;
        case StringOp::left_split:
            if (i < 1 || i > d) detail::fail_op(op, "position out of range");
            if (g.at(i) <= 1) detail::fail_op(op, "entry to split must exceed 1");
            out.assign(e.begin(), e.begin() + (i - 1));
            out.push_back(1);
            out.push_back(0);
            out.push_back(g.at(i) - 1);
            out.insert(out.end(), e.begin() + i, e.end());
            break;
        case StringOp::right_split:
            if (i < 1 || i > d) detail::fail_op(op, "position out of range");
            if (g.at(i) <= 1) detail::fail_op(op, "entry to split must exceed 1");
            out.assign(e.begin(), e.begin() + (i - 1));
            out.push_back(g.at(i) - 1);
            out.push_back(0);
            out.push_back(1);
            out.insert(out.end(), e.begin() + i, e.end());
            break;
        case StringOp::capping:
            if (g.at(1) == 0 || g.at(d) == 0) detail::fail_op(op, "both end entries must be nonzero");
            out.push_back(0);
            out.insert(out.end(), e.begin(), e.end());
            out.push_back(0);
            break;
        case StringOp::left_diffusion:
            if (i <= 1 || i > d) detail::fail_op(op, "position must be in (1, dim]");
            if (g.at(i) <= 1) detail::fail_op(op, "entry to diffuse must exceed 1");
            out = e;
            out[i - 2] += 1;
            out[i - 1] -= 1;
            break;
        case StringOp::right_diffusion:
            if (i < 1 || i >= d) detail::fail_op(op, "position must be in [1, dim)");
            if (g.at(i) <= 1) detail::fail_op(op, "entry to diffuse must exceed 1");
            out = e;
            out[i - 1] -= 1;
            out[i] += 1;
            break;
    }
    RString r(std::move(out));
    if (!r.irreducible()) detail::fail_op(op, "result " + r.str() + " is reducible");
    return r;
}

/// True iff the string is the output of appending, splitting or insertion
/// applied to some shorter irreducible string.
inline bool derivable_from_another(const RString& g) {
    const int d = g.dim();
    if (d < 4) return false;
    if (g.at(1) == 0 && g.at(2) == 0) return true;                 // left appending
    if (g.at(d - 1) == 0 && g.at(d) == 0) return true;             // right appending
    for (int i = 3; i + 1 < d; i += 2)                             // insertion
        if (g.at(i) == 0 && g.at(i + 1) == 0) return true;
    for (int i = 1; i + 2 <= d; ++i) {                             // splits
        if (g.at(i) == 1 && g.at(i + 1) == 0 && g.at(i + 2) >= 1) return true;
        if (g.at(i) >= 1 && g.at(i + 1) == 0 && g.at(i + 2) == 1) return true;
    }
    return false;
}

/// The 2^n elementary strings of order n: dimension-2 seeds, closed under
/// capping and diffusion, minus anything reachable by appending, splitting
/// or insertion.
inline std::vector<RString> enumerate_elementary(int n) {
    if (n < 1) throw error("enumerate_elementary: order must be >= 1");
    if (n > 12) throw error("enumerate_elementary: order capped at 12 (the set has 2^n members)");
    std::set<RString> seen;
    std::vector<RString> queue;
    for (int k = 0; k <= n; ++k) {
        RString seed({k, n - k});
        seen.insert(seed);
        queue.push_back(seed);
    }
    const int dim_cap = 2 * n + 4;  // defensive; closure stalls well below this
    while (!queue.empty()) {
        const RString g = queue.back();
        queue.pop_back();
        std::vector<RString> next;
        try {
            next.push_back(apply(g, StringOp::capping));
        } catch (const inapplicable_operation&) {}
        for (int i = 1; i <= g.dim(); ++i) {
            for (StringOp op : {StringOp::left_diffusion, StringOp::right_diffusion}) {
                try {
                    next.push_back(apply(g, op, i));
                } catch (const inapplicable_operation&) {}
            }
        }
        for (auto& r : next) {
            if (r.dim() > dim_cap) throw error("enumerate_elementary: closure exceeded bound");
            if (seen.insert(r).second) queue.push_back(r);
        }
    }
    std::vector<RString> out;
    for (const auto& g : seen)
        if (!derivable_from_another(g)) out.push_back(g);
    return out;  // std::set already yields canonical (dim, lex) order
}

struct DerivationEdge {
    RString from, to;
    StringOp op;
    int pos = 0;
};

namespace detail {

/// All distinct results of appending / splitting / insertion on g, labelled by
/// the first producing operation in declaration order.
inline std::vector<DerivationEdge> growth_edges(const RString& g) {
    std::map<RString, DerivationEdge> out;
    auto offer = [&](StringOp op, int i) {
        try {
            RString r = apply(g, op, i);
            out.emplace(r, DerivationEdge{g, r, op, i});
        } catch (const inapplicable_operation&) {}
    };
    offer(StringOp::left_append, 0);
    offer(StringOp::right_append, 0);
    for (int i = 3; i <= g.dim(); i += 2) offer(StringOp::insertion, i);
    for (int i = 1; i <= g.dim(); ++i) offer(StringOp::left_split, i);
    for (int i = 1; i <= g.dim(); ++i) offer(StringOp::right_split, i);
    std::vector<DerivationEdge> v;
    for (auto& [k, e] : out) v.push_back(e);
    return v;
}

}  // namespace detail

/// Closure of an elementary string under appending, splitting and insertion
/// up to max_dim.
inline std::vector<RString> class_members(const RString& elem, int max_dim) {
    if (!elem.irreducible()) throw error("class_members: seed string is reducible");
    if (max_dim % 2 != 0) throw error("class_members: dimension bound must be even");
    std::set<RString> seen{elem};
    std::vector<RString> queue{elem};
    while (!queue.empty()) {
        RString g = queue.back();
        queue.pop_back();
        if (g.dim() + 2 > max_dim) continue;
        for (const auto& e : detail::growth_edges(g))
            if (seen.insert(e.to).second) queue.push_back(e.to);
    }
    return {seen.begin(), seen.end()};
}

/// Edge list of the class derivation graph, sorted by (from, to).
inline std::vector<DerivationEdge> class_derivation(const RString& elem, int max_dim) {
    std::vector<DerivationEdge> edges;
    std::set<RString> seen{elem};
    std::vector<RString> queue{elem};
    while (!queue.empty()) {
        RString g = queue.back();
        queue.pop_back();
        if (g.dim() + 2 > max_dim) continue;
        for (const auto& e : detail::growth_edges(g)) {
            edges.push_back(e);
            if (seen.insert(e.to).second) queue.push_back(e.to);
        }
    }
    std::sort(edges.begin(), edges.end(), [](const DerivationEdge& a, const DerivationEdge& b) {
        if (!(a.from == b.from)) return a.from < b.from;
        return a.to < b.to;
    });
    return edges;
}

/// Only classes whose elementary string ends in zero survive multiplication
/// by the zeroth-order multiplier coupling on the right.
inline bool survives_right_multiplication(const RString& elem) {
    return elem.at(elem.dim()) == 0;
}

// ---------------------------------------------------------------------------
// Numerical evaluation
// ---------------------------------------------------------------------------

struct RMatrixContext {
    Matrix atilde;   // invertible
    Vector ctilde;   // diagonal of Ctilde
};

inline RMatrixContext context_from(const ButcherTableau& t) {
    return RMatrixContext{lower_right_block(t), t.c.tail(t.s - 1)};
}

/// Well-conditioned random context with entries uniform in [-1,1].
inline RMatrixContext random_context(int dim, std::mt19937_64& rng, double cond_cap = 1e6) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RMatrixContext ctx;
    ctx.atilde.resize(dim, dim);
    ctx.ctilde.resize(dim);
    for (int tries = 0; tries < 1000; ++tries) {
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) ctx.atilde(i, j) = u(rng);
        for (int i = 0; i < dim; ++i) ctx.ctilde(i) = u(rng);
        if (condition_1norm(ctx.atilde) < cond_cap) return ctx;
    }
    throw error("random_context: could not draw a well-conditioned matrix");
}

/// R_gamma = C^{g1} Ainv [ prod_{i even} C^{gi} A C^{g(i+1)} Ainv ] C^{g(dim)}.
inline Matrix eval_R(const RString& g, const RMatrixContext& ctx) {
    const int d = g.dim();
    if (d < 2 || d % 2 != 0) throw error("eval_R: dimension must be even and >= 2");
    if (!g.irreducible()) throw error("eval_R: string " + g.str() + " is reducible");
    Eigen::FullPivLU<Matrix> lu(ctx.atilde);
    if (!lu.isInvertible()) throw singular_matrix("eval_R: context matrix singular");
    const Matrix ainv = lu.inverse();
    auto cpow = [&](int k) {
        return Matrix(ctx.ctilde.array().pow(k).matrix().asDiagonal());
    };
    Matrix m = cpow(g.at(1)) * ainv;
    for (int i = 2; i + 1 <= d - 1; i += 2)
        m = m * cpow(g.at(i)) * ctx.atilde * cpow(g.at(i + 1)) * ainv;
    return m * cpow(g.at(d));
}

}  // namespace plrk
