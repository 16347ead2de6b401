#pragma once

// Stage system, Newton solution and stepping for the partitioned scheme:
//   Q_i = q0 + h sum_j a_ij f(Q_j, P_j)          i = 2..s   (Q_1 = q0)
//   P_i = p0 + h sum_j ahat_ij g(Q_j, P_j, L_j)  i = 1..s
//   p_i = p0 + h sum_j a_ij    g(Q_j, P_j, L_j)  (eliminated inline)
//   0   = phi(Q_i, p_i)                          i = 2..s   (L_1 = lambda0)
// with q1 = Q_s, p1 = p0 + h sum_j bhat_j W_j (= p_s by stiff accuracy)
// and lambda1 = L_s.

#include "plrk/common.hpp"
#include "plrk/tableau.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>
#include <utility>
#include <vector>

namespace plrk {

struct DAEProblem {
    std::string name;
    int n = 0;  // configuration / momentum dimension
    int m = 0;  // constraint dimension

    std::function<Vector(const Vector&, const Vector&)> f;                  // (q,p) -> n
    std::function<Vector(const Vector&, const Vector&, const Vector&)> g;   // (q,p,l) -> n
    std::function<Vector(const Vector&, const Vector&)> phi;                // (q,p) -> m

    std::function<Matrix(const Vector&, const Vector&)> d1f, d2f;                 // n x n
    std::function<Matrix(const Vector&, const Vector&, const Vector&)> d1g, d2g;  // n x n
    std::function<Matrix(const Vector&, const Vector&, const Vector&)> d3g;       // n x m
    std::function<Matrix(const Vector&, const Vector&)> d1phi, d2phi;             // m x n

    /// Closed-form reference t -> (q, p, lambda), when available.
    std::optional<std::function<std::tuple<Vector, Vector, Vector>(double)>> exact;

    /// Canonical consistent starting point.
    struct Initial {
        double t = 0.0;
        Vector q, p, lam;
    } initial;
};

struct SystemState {
    double t = 0.0;
    Vector q, p, lam;
};

struct SolverConfig {
    double newton_tol = 1e-12;
    int max_iterations = 25;
    enum class JacobianMode { analytic, finite_difference };
    JacobianMode jacobian = JacobianMode::analytic;
    bool full_newton = false;      // default: factor once per step at the predictor
    double fd_scale = 1e-7;        // finite-difference step 1e-7 * (1 + |x|)
    double consistency_tol = 1e-9; // phi(q,p) gate for consistent initialization
    double cond_threshold = 1e12;  // (D2phi D3g) condition monitor

    void validate() const {
        if (!(newton_tol > 0.0) || !(consistency_tol > 0.0) || !(fd_scale > 0.0))
            throw error("SolverConfig: tolerances must be positive");
        if (max_iterations < 1) throw error("SolverConfig: max_iterations must be >= 1");
    }
};

/// Which stage the constraints are paired with. `proposed` pins them to the
/// A-integrated momenta p_i; `naive` pins them to the hat-method momenta P_i,
/// which leaves the trailing multiplier undetermined and the iteration matrix
/// structurally singular.
enum class StageLayout { proposed, naive };

struct StageSolution {
    std::vector<Vector> Q;      // i = 1..s (Q[0] = q0)
    std::vector<Vector> P;      // i = 1..s
    std::vector<Vector> Lam;    // i = 1..s (Lam[0] = lambda0)
    std::vector<Vector> p_aux;  // i = 1..s, A-integrated momenta
    std::vector<Vector> W;      // g at the stages
    int iterations = 0;
    double residual_norm = 0.0;
};

namespace detail {

struct StageDims {
    int s, n, m;
    int nq, np, nl, total;
    StageDims(const DAEProblem& prob, int stages)
        : s(stages), n(prob.n), m(prob.m), nq((s - 1) * n), np(s * n), nl((s - 1) * m),
          total(nq + np + nl) {}
    int qoff(int i) const { return (i - 2) * n; }            // i = 2..s
    int poff(int i) const { return nq + (i - 1) * n; }       // i = 1..s
    int loff(int i) const { return nq + np + (i - 2) * m; }  // i = 2..s
};

struct StageView {
    std::vector<Vector> Q, P, Lam;
};

inline StageView unpack(const StageDims& d, const SystemState& s0, const Vector& x) {
    StageView v;
    v.Q.resize(d.s);
    v.P.resize(d.s);
    v.Lam.resize(d.s);
    v.Q[0] = s0.q;
    v.Lam[0] = s0.lam;
    for (int i = 2; i <= d.s; ++i) v.Q[i - 1] = x.segment(d.qoff(i), d.n);
    for (int i = 1; i <= d.s; ++i) v.P[i - 1] = x.segment(d.poff(i), d.n);
    for (int i = 2; i <= d.s; ++i) v.Lam[i - 1] = x.segment(d.loff(i), d.m);
    return v;
}

}  // namespace detail

inline int stage_unknown_count(const DAEProblem& prob, int s) {
    return detail::StageDims(prob, s).total;
}

/// Residual of the stage system at unknowns x = (Q_2..Q_s, P_1..P_s, L_2..L_s).
inline Vector stage_residual(const DAEProblem& prob, const PartitionedTableau& pt,
                             const SystemState& s0, double h, const Vector& x,
                             StageLayout layout = StageLayout::proposed) {
    const detail::StageDims d(prob, pt.s);
    if (x.size() != d.total)
        throw layout_error("stage_residual: expected " + std::to_string(d.total) +
                           " unknowns, got " + std::to_string(x.size()));
    const auto v = detail::unpack(d, s0, x);
    const Matrix& A = pt.first.A;
    const Matrix& Ah = pt.second.A;

    std::vector<Vector> V(d.s), W(d.s);
    for (int j = 0; j < d.s; ++j) {
        V[j] = prob.f(v.Q[j], v.P[j]);
        W[j] = prob.g(v.Q[j], v.P[j], v.Lam[j]);
    }
    Vector r(d.total);
    for (int i = 2; i <= d.s; ++i) {
        Vector acc = v.Q[i - 1] - s0.q;
        for (int j = 0; j < d.s; ++j) acc -= h * A(i - 1, j) * V[j];
        r.segment(d.qoff(i), d.n) = acc;
    }
    for (int i = 1; i <= d.s; ++i) {
        Vector acc = v.P[i - 1] - s0.p;
        for (int j = 0; j < d.s; ++j) acc -= h * Ah(i - 1, j) * W[j];
        r.segment(d.poff(i), d.n) = acc;
    }
    for (int i = 2; i <= d.s; ++i) {
        if (layout == StageLayout::proposed) {
            Vector pi = s0.p;
            for (int j = 0; j < d.s; ++j) pi += h * A(i - 1, j) * W[j];
            r.segment(d.loff(i), d.m) = prob.phi(v.Q[i - 1], pi);
        } else {
            r.segment(d.loff(i), d.m) = prob.phi(v.Q[i - 1], v.P[i - 1]);
        }
    }
    return r;
}

/// Analytic Jacobian of stage_residual with respect to x.
inline Matrix stage_jacobian(const DAEProblem& prob, const PartitionedTableau& pt,
                             const SystemState& s0, double h, const Vector& x,
                             StageLayout layout = StageLayout::proposed) {
    const detail::StageDims d(prob, pt.s);
    const auto v = detail::unpack(d, s0, x);
    const Matrix& A = pt.first.A;
    const Matrix& Ah = pt.second.A;

    std::vector<Matrix> D1f(d.s), D2f(d.s), D1g(d.s), D2g(d.s), D3g(d.s);
    std::vector<Vector> W(d.s);
    for (int j = 0; j < d.s; ++j) {
        D1f[j] = prob.d1f(v.Q[j], v.P[j]);
        D2f[j] = prob.d2f(v.Q[j], v.P[j]);
        D1g[j] = prob.d1g(v.Q[j], v.P[j], v.Lam[j]);
        D2g[j] = prob.d2g(v.Q[j], v.P[j], v.Lam[j]);
        D3g[j] = prob.d3g(v.Q[j], v.P[j], v.Lam[j]);
        W[j] = prob.g(v.Q[j], v.P[j], v.Lam[j]);
    }
    Matrix J = Matrix::Zero(d.total, d.total);
    const Matrix In = Matrix::Identity(d.n, d.n);
    for (int i = 2; i <= d.s; ++i) {
        const int r0 = d.qoff(i);
        for (int j = 2; j <= d.s; ++j)
            J.block(r0, d.qoff(j), d.n, d.n) =
                (i == j ? In : Matrix(Matrix::Zero(d.n, d.n))) - h * A(i - 1, j - 1) * D1f[j - 1];
        for (int j = 1; j <= d.s; ++j)
            J.block(r0, d.poff(j), d.n, d.n) = -h * A(i - 1, j - 1) * D2f[j - 1];
    }
    for (int i = 1; i <= d.s; ++i) {
        const int r0 = d.poff(i);
        for (int j = 2; j <= d.s; ++j)
            J.block(r0, d.qoff(j), d.n, d.n) = -h * Ah(i - 1, j - 1) * D1g[j - 1];
        for (int j = 1; j <= d.s; ++j)
            J.block(r0, d.poff(j), d.n, d.n) =
                (i == j ? In : Matrix(Matrix::Zero(d.n, d.n))) - h * Ah(i - 1, j - 1) * D2g[j - 1];
        for (int j = 2; j <= d.s; ++j)
            J.block(r0, d.loff(j), d.n, d.m) = -h * Ah(i - 1, j - 1) * D3g[j - 1];
    }
    for (int i = 2; i <= d.s; ++i) {
        const int r0 = d.loff(i);
        if (layout == StageLayout::proposed) {
            Vector pi = s0.p;
            for (int j = 0; j < d.s; ++j) pi += h * A(i - 1, j) * W[j];
            const Matrix d1p = prob.d1phi(v.Q[i - 1], pi);
            const Matrix d2p = prob.d2phi(v.Q[i - 1], pi);
            for (int j = 2; j <= d.s; ++j)
                J.block(r0, d.qoff(j), d.m, d.n) =
                    (i == j ? d1p : Matrix(Matrix::Zero(d.m, d.n))) +
                    h * A(i - 1, j - 1) * d2p * D1g[j - 1];
            for (int j = 1; j <= d.s; ++j)
                J.block(r0, d.poff(j), d.m, d.n) = h * A(i - 1, j - 1) * d2p * D2g[j - 1];
            for (int j = 2; j <= d.s; ++j)
                J.block(r0, d.loff(j), d.m, d.m) = h * A(i - 1, j - 1) * d2p * D3g[j - 1];
        } else {
            J.block(r0, d.qoff(i), d.m, d.n) = prob.d1phi(v.Q[i - 1], v.P[i - 1]);
            J.block(r0, d.poff(i), d.m, d.n) = prob.d2phi(v.Q[i - 1], v.P[i - 1]);
        }
    }
    return J;
}

/// Forward-difference Jacobian, used as a cross-check and as a fallback mode.
inline Matrix stage_jacobian_fd(const DAEProblem& prob, const PartitionedTableau& pt,
                                const SystemState& s0, double h, const Vector& x,
                                StageLayout layout, double fd_scale) {
    const Vector f0 = stage_residual(prob, pt, s0, h, x, layout);
    Matrix J(f0.size(), x.size());
    Vector xp = x;
    for (int k = 0; k < x.size(); ++k) {
        const double step = fd_scale * (1.0 + std::abs(x(k)));
        xp(k) = x(k) + step;
        J.col(k) = (stage_residual(prob, pt, s0, h, xp, layout) - f0) / step;
        xp(k) = x(k);
    }
    return J;
}

namespace detail {

[[noreturn]] inline void report_singular(const Matrix& J, const StageDims& d, StageLayout layout) {
    std::string msg = "singular stage iteration matrix";
    if (d.nl > 0) {
        Eigen::FullPivLU<Matrix> slab(J.rightCols(d.nl));
        if (slab.rank() < d.nl) {
            msg += ": multiplier block D2phi*(stage matrix x I)*D3g is rank-deficient";
            if (layout == StageLayout::naive)
                msg += " (constraints paired with the hat-method momenta leave the trailing "
                       "multiplier undetermined)";
        }
    }
    throw singular_matrix(msg);
}

}  // namespace detail

/// Newton solve of the stage system from the trivial predictor
/// (all stages at the initial point). Simplified Newton by default.
inline StageSolution solve_stages(const DAEProblem& prob, const PartitionedTableau& pt,
                                  const SystemState& s0, double h, const SolverConfig& cfg,
                                  StageLayout layout = StageLayout::proposed) {
    cfg.validate();
    const detail::StageDims d(prob, pt.s);
    Vector x(d.total);
    for (int i = 2; i <= d.s; ++i) x.segment(d.qoff(i), d.n) = s0.q;
    for (int i = 1; i <= d.s; ++i) x.segment(d.poff(i), d.n) = s0.p;
    for (int i = 2; i <= d.s; ++i) x.segment(d.loff(i), d.m) = s0.lam;

    Vector r = stage_residual(prob, pt, s0, h, x, layout);
    std::vector<double> history{inf_norm(r)};
    int iters = 0;
    Eigen::FullPivLU<Matrix> lu;
    auto factor = [&](const Vector& at) {
        const Matrix J = cfg.jacobian == SolverConfig::JacobianMode::analytic
                             ? stage_jacobian(prob, pt, s0, h, at, layout)
                             : stage_jacobian_fd(prob, pt, s0, h, at, layout, cfg.fd_scale);
        lu.compute(J);
        if (!lu.isInvertible()) detail::report_singular(J, d, layout);
    };

    bool factored = false;
    while (history.back() > cfg.newton_tol) {
        if (iters >= cfg.max_iterations) {
            std::ostringstream os;
            os << "stage Newton did not converge in " << cfg.max_iterations
               << " iterations (residual " << history.back() << ", h = " << h << ")";
            throw nonconvergence(os.str(), history);
        }
        if (!factored || cfg.full_newton) {
            factor(x);
            factored = true;
        }
        x -= lu.solve(r);
        r = stage_residual(prob, pt, s0, h, x, layout);
        history.push_back(inf_norm(r));
        ++iters;
    }

    const auto v = detail::unpack(d, s0, x);
    StageSolution out;
    out.Q = v.Q;
    out.P = v.P;
    out.Lam = v.Lam;
    out.W.resize(d.s);
    out.p_aux.resize(d.s);
    for (int j = 0; j < d.s; ++j) out.W[j] = prob.g(v.Q[j], v.P[j], v.Lam[j]);
    for (int i = 1; i <= d.s; ++i) {
        Vector pi = s0.p;
        for (int j = 0; j < d.s; ++j) pi += h * pt.first.A(i - 1, j) * out.W[j];
        out.p_aux[i - 1] = pi;
    }
    out.iterations = iters;
    out.residual_norm = history.back();
    return out;
}

/// Multiplier consistent with the hidden constraint
/// (D1phi . f)(q,p) + (D2phi . g)(q,p,lambda) = 0, found by Newton.
inline Vector consistent_lambda(const DAEProblem& prob, const Vector& q, const Vector& p,
                                const Vector& guess, const SolverConfig& cfg = {}) {
    cfg.validate();
    if (inf_norm(prob.phi(q, p)) > cfg.consistency_tol)
        throw error("consistent_lambda: point violates phi(q,p) = 0");
    const Matrix d1p = prob.d1phi(q, p);
    const Matrix d2p = prob.d2phi(q, p);
    const Vector fq = prob.f(q, p);
    Vector lam = guess;
    auto residual = [&](const Vector& l) -> Vector { return d1p * fq + d2p * prob.g(q, p, l); };
    Vector r = residual(lam);
    std::vector<double> history{inf_norm(r)};
    for (int it = 0; history.back() > cfg.newton_tol; ++it) {
        if (it >= cfg.max_iterations) {
            std::ostringstream os;
            os << "consistent_lambda did not converge (residual " << history.back() << ")";
            throw nonconvergence(os.str(), history);
        }
        const Matrix J = d2p * prob.d3g(q, p, lam);
        Eigen::FullPivLU<Matrix> lu(J);
        if (!lu.isInvertible())
            throw index_violation("consistent_lambda: D2phi*D3g singular at the given point");
        lam -= lu.solve(r);
        r = residual(lam);
        history.push_back(inf_norm(r));
    }
    return lam;
}

struct StepResult {
    SystemState state;
    double phi_residual = 0.0;
    int newton_iterations = 0;
    double endpoint_gap = 0.0;  // | p1(bhat) - p_s(A) |, zero up to roundoff
};

/// One accepted step of the scheme.
inline StepResult step(const DAEProblem& prob, const PartitionedTableau& pt,
                       const SystemState& s0, double h, const SolverConfig& cfg = {}) {
    const StageSolution st = solve_stages(prob, pt, s0, h, cfg, StageLayout::proposed);
    StepResult res;
    res.state.t = s0.t + h;
    res.state.q = st.Q[pt.s - 1];
    Vector p1 = s0.p;
    for (int j = 0; j < pt.s; ++j) p1 += h * pt.second.b(j) * st.W[j];
    res.state.p = p1;
    res.state.lam = st.Lam[pt.s - 1];
    res.endpoint_gap = inf_norm(p1 - st.p_aux[pt.s - 1]);
    if (res.endpoint_gap > 1e-12 * (1.0 + inf_norm(p1)))
        throw error("step: stiffly-accurate endpoint mismatch between the two momentum updates");
    res.phi_residual = inf_norm(prob.phi(res.state.q, res.state.p));
    res.newton_iterations = st.iterations;
    const double cond =
        condition_1norm(prob.d2phi(res.state.q, res.state.p) *
                        prob.d3g(res.state.q, res.state.p, res.state.lam));
    if (!(cond <= cfg.cond_threshold))
        throw index_violation("step: D2phi*D3g ill-conditioned at accepted point (estimate " +
                              g17(cond) + ")");
    return res;
}

struct Trajectory {
    std::vector<StepResult> points;  // points[0] is the initial state
};

/// Fixed-step integration; fails fast on the first unsolvable step.
inline Trajectory integrate(const DAEProblem& prob, const PartitionedTableau& pt,
                            const SystemState& s0, double h, int nsteps,
                            const SolverConfig& cfg = {}) {
    Trajectory traj;
    StepResult init;
    init.state = s0;
    init.phi_residual = inf_norm(prob.phi(s0.q, s0.p));
    traj.points.push_back(init);
    SystemState cur = s0;
    for (int k = 0; k < nsteps; ++k) {
        try {
            StepResult r = step(prob, pt, cur, h, cfg);
            cur = r.state;
            traj.points.push_back(std::move(r));
        } catch (const nonconvergence& e) {
            std::ostringstream os;
            os << "integrate: step " << (k + 1) << " of " << nsteps << " (t = " << cur.t
               << ", h = " << h << "): " << e.what();
            throw nonconvergence(os.str(), e.residual_history);
        } catch (const error& e) {
            std::ostringstream os;
            os << "integrate: step " << (k + 1) << " of " << nsteps << " (t = " << cur.t
               << ", h = " << h << "): " << e.what();
            throw error(os.str());
        }
    }
    return traj;
}

/// Deterministic CSV: t, q[0..n), p[0..n), lambda[0..m), phi_residual, newton_iters.
inline void write_trajectory_csv(std::ostream& os, const DAEProblem& prob,
                                 const Trajectory& traj) {
    os << "t";
    for (int i = 0; i < prob.n; ++i) os << ",q" << i;
    for (int i = 0; i < prob.n; ++i) os << ",p" << i;
    for (int i = 0; i < prob.m; ++i) os << ",lambda" << i;
    os << ",phi_residual,newton_iters\n";
    for (const auto& pt : traj.points) {
        os << g17(pt.state.t);
        for (int i = 0; i < prob.n; ++i) os << "," << g17(pt.state.q(i));
        for (int i = 0; i < prob.n; ++i) os << "," << g17(pt.state.p(i));
        for (int i = 0; i < prob.m; ++i) os << "," << g17(pt.state.lam(i));
        os << "," << g17(pt.phi_residual) << "," << pt.newton_iterations << "\n";
    }
}

}  // namespace plrk
