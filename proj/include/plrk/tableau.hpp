#pragma once

// Lobatto IIIA / IIIB coefficient pairs and the algebraic identities they
// satisfy: quadrature, collocation and adjoint conditions, the coupled
// conditions of compatible pairs, stiff accuracy, symplectic conjugacy and
// the stability function.

#include "plrk/common.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

namespace plrk {

struct ButcherTableau {
    int s = 0;
    Matrix A;  // s x s
    Vector b;  // s
    Vector c;  // s
};

/// A compatible pair sharing nodes c: `first` is the collocation (A) method,
/// `second` its symplectic conjugate (Ahat).
struct PartitionedTableau {
    ButcherTableau first;
    ButcherTableau second;
    int s = 0;
};

struct ConditionReport {
    std::string name;
    int order = 0;          // highest index tested
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline ConditionReport make_report(std::string name, int order, double residual, double tol) {
    return ConditionReport{std::move(name), order, residual, tol, residual <= tol};
}

namespace detail {

/// Monomial coefficients of the Legendre polynomial P_n on [-1,1],
/// lowest degree first, built from the three-term recurrence.
inline std::vector<double> legendre_coefficients(int n) {
    std::vector<double> pm2{1.0};       // P_0
    if (n == 0) return pm2;
    std::vector<double> pm1{0.0, 1.0};  // P_1
    for (int k = 2; k <= n; ++k) {
        std::vector<double> p(k + 1, 0.0);
        for (size_t j = 0; j < pm1.size(); ++j)
            p[j + 1] += (2.0 * k - 1.0) / k * pm1[j];
        for (size_t j = 0; j < pm2.size(); ++j)
            p[j] -= (k - 1.0) / k * pm2[j];
        pm2 = std::move(pm1);
        pm1 = std::move(p);
    }
    return pm1;
}

inline std::vector<double> differentiate(const std::vector<double>& poly) {
    if (poly.size() <= 1) return {0.0};
    std::vector<double> d(poly.size() - 1);
    for (size_t j = 1; j < poly.size(); ++j) d[j - 1] = j * poly[j];
    return d;
}

inline double horner(const std::vector<double>& poly, double x) {
    double v = 0.0;
    for (size_t j = poly.size(); j-- > 0;) v = v * x + poly[j];
    return v;
}

inline double bisect(const std::vector<double>& poly, double lo, double hi) {
    double flo = horner(poly, lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = horner(poly, mid);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Lobatto quadrature nodes on [0,1]: endpoints plus the roots of P'_{s-1}.
inline Vector lobatto_nodes(int s) {
    if (s < 2 || s > 5)
        throw unsupported_order("lobatto_nodes: stage count " + std::to_string(s) +
                                " outside supported range [2,5]");
    Vector c(s);
    c(0) = 0.0;
    c(s - 1) = 1.0;
    if (s > 2) {
        const auto dp = detail::differentiate(detail::legendre_coefficients(s - 1));
        // s-2 simple interior roots on (-1,1); bracket them by a sign scan.
        std::vector<double> roots;
        const int grid = 2048;
        double xp = -1.0 + 1e-9;
        double fp = detail::horner(dp, xp);
        for (int k = 1; k <= grid; ++k) {
            const double x = -1.0 + 2.0 * k / grid - (k == grid ? 1e-9 : 0.0);
            const double f = detail::horner(dp, x);
            if ((fp < 0.0) != (f < 0.0)) roots.push_back(detail::bisect(dp, xp, x));
            xp = x;
            fp = f;
        }
        if (static_cast<int>(roots.size()) != s - 2)
            throw error("lobatto_nodes: interior root count mismatch");
        std::sort(roots.begin(), roots.end());
        for (int i = 0; i < s - 2; ++i) c(i + 1) = 0.5 * (1.0 + roots[i]);
        // Lobatto nodes are symmetric about 1/2; average out bisection noise.
        for (int i = 1; i < s - 1; ++i) {
            const double sym = 0.5 * (c(i) + 1.0 - c(s - 1 - i));
            c(i) = sym;
        }
    }
    for (int i = 0; i + 1 < s; ++i)
        if (!(c(i) < c(i + 1))) throw error("lobatto_nodes: nodes not strictly increasing");
    return c;
}

/// Collocation construction: row i of A solves sum_j a_ij c_j^{k-1} = c_i^k / k
/// for k = 1..s, and b solves the quadrature analogue with right side 1/k.
inline ButcherTableau lobatto_iiia(int s) {
    const Vector c = lobatto_nodes(s);
    Matrix M(s, s);
    for (int k = 1; k <= s; ++k)
        for (int j = 0; j < s; ++j) M(k - 1, j) = std::pow(c(j), k - 1);
    Eigen::PartialPivLU<Matrix> lu(M);
    ButcherTableau t;
    t.s = s;
    t.c = c;
    t.A.resize(s, s);
    Vector rhs(s);
    for (int i = 0; i < s; ++i) {
        for (int k = 1; k <= s; ++k) rhs(k - 1) = std::pow(c(i), k) / k;
        t.A.row(i) = lu.solve(rhs).transpose();
    }
    for (int k = 1; k <= s; ++k) rhs(k - 1) = 1.0 / k;
    t.b = lu.solve(rhs);
    // Construction sanity: row sums reproduce the nodes, weights sum to one.
    if ((t.A.rowwise().sum() - c).cwiseAbs().maxCoeff() > 1e-12)
        throw error("lobatto_iiia: row-sum consistency violated");
    if (std::abs(t.b.sum() - 1.0) > 1e-12) throw error("lobatto_iiia: weights do not sum to 1");
    return t;
}

/// Symplectic conjugate of a stiffly accurate method:
/// ahat_ij = b_j - (b_j / b_i) a_ji.
inline ButcherTableau lobatto_iiib(const ButcherTableau& iiia) {
    const int s = iiia.s;
    for (int i = 0; i < s; ++i)
        if (iiia.b(i) == 0.0)
            throw error("lobatto_iiib: conjugation undefined, b_" + std::to_string(i + 1) +
                        " vanishes");
    ButcherTableau t;
    t.s = s;
    t.c = iiia.c;
    t.b = iiia.b;
    t.A.resize(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            t.A(i, j) = iiia.b(j) - iiia.b(j) / iiia.b(i) * iiia.A(j, i);
    return t;
}

inline PartitionedTableau lobatto_pair(int s) {
    PartitionedTableau p;
    p.first = lobatto_iiia(s);
    p.second = lobatto_iiib(p.first);
    p.s = s;
    return p;
}

// ---------------------------------------------------------------------------
// Simplifying assumptions
// ---------------------------------------------------------------------------

enum class Condition { B, C, D, Bhat, Chat, Dhat, CChat, DDhat, ChatC, DhatD };

inline std::string_view condition_tag(Condition c) {
    switch (c) {
        case Condition::B: return "B";
        case Condition::C: return "C";
        case Condition::D: return "D";
        case Condition::Bhat: return "Bhat";
        case Condition::Chat: return "Chat";
        case Condition::Dhat: return "Dhat";
        case Condition::CChat: return "CChat";
        case Condition::DDhat: return "DDhat";
        case Condition::ChatC: return "ChatC";
        case Condition::DhatD: return "DhatD";
    }
    return "?";
}

inline bool is_coupled(Condition c) {
    return c == Condition::CChat || c == Condition::DDhat || c == Condition::ChatC ||
           c == Condition::DhatD;
}

namespace detail {

inline Vector cpow(const Vector& c, int k) {
    Vector v(c.size());
    for (int i = 0; i < c.size(); ++i) v(i) = std::pow(c(i), k);
    return v;
}

/// Max residual of the named identity at one index k.
inline double condition_residual_k(const PartitionedTableau& pt, Condition which, int k) {
    const Matrix& A = pt.first.A;
    const Matrix& Ah = pt.second.A;
    const Vector& b = pt.first.b;
    const Vector& bh = pt.second.b;
    const Vector& c = pt.first.c;
    const int s = pt.s;
    switch (which) {
        case Condition::B:
            return std::abs(b.dot(cpow(c, k - 1)) - 1.0 / k);
        case Condition::Bhat:
            return std::abs(bh.dot(cpow(c, k - 1)) - 1.0 / k);
        case Condition::C:
            return (A * cpow(c, k - 1) - cpow(c, k) / k).cwiseAbs().maxCoeff();
        case Condition::Chat:
            return (Ah * cpow(c, k - 1) - cpow(c, k) / k).cwiseAbs().maxCoeff();
        case Condition::D: {
            RowVector lhs = (b.cwiseProduct(cpow(c, k - 1))).transpose() * A;
            RowVector rhs = (b.cwiseProduct(Vector::Ones(s) - cpow(c, k)) / k).transpose();
            return (lhs - rhs).cwiseAbs().maxCoeff();
        }
        case Condition::Dhat: {
            RowVector lhs = (bh.cwiseProduct(cpow(c, k - 1))).transpose() * Ah;
            RowVector rhs = (bh.cwiseProduct(Vector::Ones(s) - cpow(c, k)) / k).transpose();
            return (lhs - rhs).cwiseAbs().maxCoeff();
        }
        case Condition::CChat:
            return (A * (Ah * cpow(c, k - 2)) - cpow(c, k) / (k * (k - 1.0))).cwiseAbs().maxCoeff();
        case Condition::ChatC:
            return (Ah * (A * cpow(c, k - 2)) - cpow(c, k) / (k * (k - 1.0))).cwiseAbs().maxCoeff();
        case Condition::DDhat: {
            RowVector lhs = (b.cwiseProduct(cpow(c, k - 2))).transpose() * A * Ah;
            RowVector rhs(s);
            for (int l = 0; l < s; ++l)
                rhs(l) = b(l) / (k * (k - 1.0)) *
                         ((k - 1.0) - (k * c(l) - std::pow(c(l), k)));
            return (lhs - rhs).cwiseAbs().maxCoeff();
        }
        case Condition::DhatD: {
            RowVector lhs = (bh.cwiseProduct(cpow(c, k - 2))).transpose() * Ah * A;
            RowVector rhs(s);
            for (int l = 0; l < s; ++l)
                rhs(l) = bh(l) / (k * (k - 1.0)) *
                         ((k - 1.0) - (k * c(l) - std::pow(c(l), k)));
            return (lhs - rhs).cwiseAbs().maxCoeff();
        }
    }
    return 0.0;
}

}  // namespace detail

/// Evaluate the named identity for every index and every k up to k_max.
/// A failing condition is a report, not an error; k_max below the condition's
/// first index yields an empty (vacuously passing) report.
inline ConditionReport check_simplifying(const PartitionedTableau& pt, Condition which, int k_max,
                                         double tol = 1e-12) {
    if (!is_coupled(which) && k_max < 0) k_max = 0;
    const int k0 = is_coupled(which) ? 2 : 1;
    double worst = 0.0;
    for (int k = k0; k <= k_max; ++k)
        worst = std::max(worst, detail::condition_residual_k(pt, which, k));
    std::string name = std::string(condition_tag(which)) + "(" + std::to_string(k_max) + ")";
    return make_report(std::move(name), k_max, worst, tol);
}

/// Largest K such that the condition holds for all admissible k <= K.
inline int measured_condition_order(const PartitionedTableau& pt, Condition which,
                                    double tol = 1e-10, int k_cap = 16) {
    const int k0 = is_coupled(which) ? 2 : 1;
    int order = k0 - 1;
    for (int k = k0; k <= k_cap; ++k) {
        if (detail::condition_residual_k(pt, which, k) > tol) break;
        order = k;
    }
    return order;
}

// ---------------------------------------------------------------------------
// Structural hypotheses
// ---------------------------------------------------------------------------

inline Matrix lower_right_block(const ButcherTableau& t) {
    return t.A.bottomRightCorner(t.s - 1, t.s - 1);
}

/// a_1j = 0 for all j.
inline ConditionReport check_first_stage_explicit(const ButcherTableau& t, double tol = 1e-12) {
    return make_report("first stage explicit", 0, t.A.row(0).cwiseAbs().maxCoeff(), tol);
}

/// Invertibility of the trailing (s-1)x(s-1) block, reported as a
/// 1-norm condition estimate against a threshold.
inline ConditionReport check_trailing_block(const ButcherTableau& t, double threshold = 1e12) {
    return make_report("trailing block invertible", 0, condition_1norm(lower_right_block(t)), threshold);
}

/// a_sj = b_j for all j (stiff accuracy).
inline ConditionReport check_stiffly_accurate(const ButcherTableau& t, double tol = 1e-12) {
    return make_report("stiffly accurate", 0, (t.A.row(t.s - 1).transpose() - t.b).cwiseAbs().maxCoeff(), tol);
}

/// ahat_is = 0 for all i.
inline ConditionReport check_hat_trailing_column(const ButcherTableau& t, double tol = 1e-12) {
    return make_report("hat trailing column zero", 0, t.A.col(t.s - 1).cwiseAbs().maxCoeff(), tol);
}

/// ahat_i1 = bhat_1 for all i.
inline ConditionReport check_hat_leading_column(const ButcherTableau& t, double tol = 1e-12) {
    return make_report("hat leading column = b1", 0, (t.A.col(0).array() - t.b(0)).abs().maxCoeff(), tol);
}

/// Shared-node compatibility of the pair, plus bhat = b.
inline ConditionReport check_compatibility(const PartitionedTableau& pt, double tol = 1e-12) {
    const double dc = (pt.first.c - pt.second.c).cwiseAbs().maxCoeff();
    return make_report("chat=c", 0, dc, tol);
}

inline ConditionReport check_weights_match(const PartitionedTableau& pt, double tol = 1e-12) {
    return make_report("bhat=b", 0, (pt.first.b - pt.second.b).cwiseAbs().maxCoeff(), tol);
}

/// max_ij |b_i ahat_ij + bhat_j a_ji - b_i bhat_j| together with max|b - bhat|.
inline ConditionReport check_conjugacy(const PartitionedTableau& pt, double tol = 1e-12) {
    const int s = pt.s;
    double worst = (pt.first.b - pt.second.b).cwiseAbs().maxCoeff();
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            worst = std::max(worst, std::abs(pt.first.b(i) * pt.second.A(i, j) +
                                             pt.second.b(j) * pt.first.A(j, i) -
                                             pt.first.b(i) * pt.second.b(j)));
    return make_report("conjugacy", 0, worst, tol);
}

// ---------------------------------------------------------------------------
// Stability function
// ---------------------------------------------------------------------------

struct StabilityValues {
    Complex general;   // 1 + z b^T (I - zA)^{-1} 1
    Complex reduced;   // e_s^T (I - zA)^{-1} 1, valid under stiff accuracy
    bool reduced_valid = false;
};

inline StabilityValues stability_formulas(const ButcherTableau& t, Complex z) {
    const int s = t.s;
    MatrixC M = MatrixC::Identity(s, s) - z * t.A.cast<Complex>();
    Eigen::FullPivLU<MatrixC> lu(M);
    if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "stability_function: Id - zA singular at z = (" << z.real() << ", " << z.imag()
           << ")";
        throw singular_matrix(os.str());
    }
    const VectorC w = lu.solve(VectorC::Ones(s));
    StabilityValues v;
    v.general = 1.0 + z * (t.b.cast<Complex>().transpose() * w)(0);
    if (check_stiffly_accurate(t).pass) {
        v.reduced = w(s - 1);
        v.reduced_valid = true;
    }
    return v;
}

/// R(z); under stiff accuracy both formulas are computed and cross-checked.
inline Complex stability_function(const ButcherTableau& t, Complex z) {
    const StabilityValues v = stability_formulas(t, z);
    // The general form sums O(|z|) terms that cancel, so allow |z| eps slack.
    const double slack = 2e-12 * (1.0 + std::abs(z)) * std::max(1.0, std::abs(v.general));
    if (v.reduced_valid && std::abs(v.general - v.reduced) > slack)
        throw error("stability_function: general and stiffly accurate formulas disagree");
    return v.reduced_valid ? v.reduced : v.general;
}

/// Exact limit of R(z) for |z| -> infinity under H1-H3, via block elimination:
/// R(inf) = -(last component of Atilde^{-1} Atilde_1).
inline double stability_at_infinity(const ButcherTableau& t) {
    if (!check_first_stage_explicit(t).pass || !check_stiffly_accurate(t).pass)
        throw error("stability_at_infinity: tableau is not of the required stiffly "
                    "accurate / explicit-first-stage form");
    const Matrix at = lower_right_block(t);
    Eigen::FullPivLU<Matrix> lu(at);
    if (!lu.isInvertible())
        throw singular_matrix("stability_at_infinity: trailing block not invertible");
    const Vector a1 = t.A.block(1, 0, t.s - 1, 1);
    const Vector w = lu.solve(a1);
    return -w(t.s - 2);
}

// ---------------------------------------------------------------------------
// Plain-text export / import
// ---------------------------------------------------------------------------

inline void write_tableau(std::ostream& os, std::string_view name, const ButcherTableau& t) {
    os << "# " << name << " s=" << t.s << "\n";
    os << "c";
    for (int i = 0; i < t.s; ++i) os << " " << g17(t.c(i));
    os << "\nb";
    for (int i = 0; i < t.s; ++i) os << " " << g17(t.b(i));
    os << "\nA\n";
    for (int i = 0; i < t.s; ++i) {
        for (int j = 0; j < t.s; ++j) os << (j ? " " : "") << g17(t.A(i, j));
        os << "\n";
    }
}

struct NamedTableau {
    std::string name;
    ButcherTableau tableau;
};

inline NamedTableau read_tableau(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.size() < 2 || line[0] != '#')
        throw io_error("read_tableau: missing '# name s=<k>' header");
    NamedTableau out;
    std::istringstream hdr(line.substr(1));
    std::string tok;
    int s = 0;
    while (hdr >> tok) {
        if (tok.rfind("s=", 0) == 0)
            s = std::stoi(tok.substr(2));
        else
            out.name = out.name.empty() ? tok : out.name + " " + tok;
    }
    if (s < 1) throw io_error("read_tableau: bad stage count in header");
    auto read_row = [&](char expect) {
        if (!std::getline(is, line)) throw io_error("read_tableau: truncated file");
        std::istringstream ls(line);
        std::string label;
        ls >> label;
        if (label.size() != 1 || label[0] != expect)
            throw io_error(std::string("read_tableau: expected row '") + expect + "'");
        Vector v(s);
        for (int i = 0; i < s; ++i)
            if (!(ls >> v(i))) throw io_error("read_tableau: short row");
        return v;
    };
    out.tableau.s = s;
    out.tableau.c = read_row('c');
    out.tableau.b = read_row('b');
    if (!std::getline(is, line) || line != "A") throw io_error("read_tableau: expected 'A'");
    out.tableau.A.resize(s, s);
    for (int i = 0; i < s; ++i) {
        if (!std::getline(is, line)) throw io_error("read_tableau: truncated matrix");
        std::istringstream ls(line);
        for (int j = 0; j < s; ++j)
            if (!(ls >> out.tableau.A(i, j))) throw io_error("read_tableau: short matrix row");
    }
    return out;
}

}  // namespace plrk
