#pragma once

// Convergence studies: integrate over a geometric step-size grid, measure
// endpoint errors against a reference, fit observed orders on log-log scale
// and compare with the orders the tableau's verified condition orders imply.

#include "plrk/common.hpp"
#include "plrk/dae.hpp"
#include "plrk/problems.hpp"
#include "plrk/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace plrk {

inline constexpr double kRoundoffFloor = 100.0 * std::numeric_limits<double>::epsilon();

struct FitResult {
    double slope = 0.0;
    double r2 = 0.0;
    int points_used = 0;
};

namespace detail {

inline FitResult ols_loglog(const std::vector<std::pair<double, double>>& pts) {
    const int n = static_cast<int>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [h, e] : pts) {
        const double x = std::log(h), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double denom = n * sxx - sx * sx;
    FitResult fit;
    fit.points_used = n;
    fit.slope = (n * sxy - sx * sy) / denom;
    const double ss_tot = syy - sy * sy / n;
    const double intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0;
    for (const auto& [h, e] : pts) {
        const double r = std::log(e) - (intercept + fit.slope * std::log(h));
        ss_res += r * r;
    }
    fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

inline std::vector<std::pair<double, double>> trim_floor(
    const std::vector<std::pair<double, double>>& pts, double floor) {
    std::vector<std::pair<double, double>> kept;
    for (const auto& p : pts)
        if (p.second > floor) kept.push_back(p);
    return kept;
}

}  // namespace detail

/// Ordinary least squares on (log h, log error) after dropping points at the
/// round-off floor. Needs at least four usable points.
inline FitResult fit_order(const std::vector<std::pair<double, double>>& pts,
                           double floor = kRoundoffFloor) {
    const auto kept = detail::trim_floor(pts, floor);
    if (kept.size() < 4) {
        std::ostringstream os;
        os << "fit_order: only " << kept.size() << " of " << pts.size()
           << " points above the round-off floor " << floor << " [";
        for (size_t i = 0; i < kept.size(); ++i)
            os << (i ? ", " : "") << "(" << kept[i].first << ", " << kept[i].second << ")";
        os << "]";
        throw insufficient_data(os.str());
    }
    return detail::ols_loglog(kept);
}

/// Least squares over the best contiguous window of at least four
/// floor-trimmed points (highest R^2; ties go to the longer, earlier window).
/// Shields the fit from a pre-asymptotic head or a noise tail.
inline FitResult fit_order_windowed(const std::vector<std::pair<double, double>>& pts,
                                    double floor = kRoundoffFloor) {
    auto kept = detail::trim_floor(pts, floor);
    if (kept.size() < 4) return fit_order(pts, floor);  // throws with details
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    FitResult best;
    bool have = false;
    int best_len = 0, best_start = 0;
    const int n = static_cast<int>(kept.size());
    for (int len = 4; len <= n; ++len)
        for (int start = 0; start + len <= n; ++start) {
            std::vector<std::pair<double, double>> window(kept.begin() + start,
                                                          kept.begin() + start + len);
            const FitResult f = detail::ols_loglog(window);
            const bool better =
                !have || f.r2 > best.r2 + 1e-12 ||
                (std::abs(f.r2 - best.r2) <= 1e-12 &&
                 (len > best_len || (len == best_len && start < best_start)));
            if (better) {
                best = f;
                best_len = len;
                best_start = start;
                have = true;
            }
        }
    return best;
}

/// Orders implied by the tableau: measured condition orders (p, q, r) feed
/// min(p, q+r+1) for q, min(p, 2q, q+r) for p, and q or q-1 for lambda
/// depending on R(inf).
struct ExpectedOrders {
    int p = 0, q = 0, r = 0;
    double r_infinity = 0.0;
    int order_q = 0, order_p = 0, order_lambda = 0;
};

inline ExpectedOrders expected_orders(const PartitionedTableau& pt, double tol = 1e-10) {
    ExpectedOrders e;
    e.p = measured_condition_order(pt, Condition::B, tol);
    e.q = measured_condition_order(pt, Condition::C, tol);
    e.r = measured_condition_order(pt, Condition::D, tol);
    e.r_infinity = stability_at_infinity(pt.first);
    e.order_q = std::min(e.p, e.q + e.r + 1);
    e.order_p = std::min({e.p, 2 * e.q, e.q + e.r});
    e.order_lambda = std::abs(e.r_infinity - 1.0) <= tol ? e.q - 1 : e.q;
    return e;
}

struct StudyConfig {
    double h0 = 0.2;
    double ratio = 0.5;
    int count = 7;
    double T = 1.0;
    SolverConfig solver;
    double slope_tol = 0.25;
    double r2_min = 0.99;
};

struct VariableStudy {
    std::string variable;
    std::vector<std::pair<double, double>> points;  // (h, endpoint error)
    double slope = 0.0;
    double r2 = 0.0;
    int expected = 0;
    bool pass = false;
};

struct ConvergenceReport {
    std::string problem;
    int s = 0;
    double T = 0.0;
    std::vector<VariableStudy> variables;  // q, p, lambda
    double max_constraint_residual = 0.0;
    double max_endpoint_gap = 0.0;
    bool pass = false;
};

/// Endpoint reference at t = T: closed form when the problem has one, else
/// self-convergence with the s=4 pair at h_ref = h_min / 64.
inline std::tuple<Vector, Vector, Vector> reference_solution(const DAEProblem& prob,
                                                             const SystemState& s0, double T,
                                                             double h_min,
                                                             const SolverConfig& cfg) {
    if (prob.exact) return (*prob.exact)(s0.t + T);
    const PartitionedTableau ref_pair = lobatto_pair(4);
    const int nsteps = std::max(1, static_cast<int>(std::llround(T / (h_min / 64.0))));
    const Trajectory traj = integrate(prob, ref_pair, s0, T / nsteps, nsteps, cfg);
    const SystemState& last = traj.points.back().state;
    return {last.q, last.p, last.lam};
}

inline ConvergenceReport run_convergence(const DAEProblem& prob, const PartitionedTableau& pt,
                                         const StudyConfig& cfg) {
    if (cfg.count < 4) throw error("run_convergence: need at least 4 step sizes");
    if (!(cfg.ratio > 0.0 && cfg.ratio < 1.0))
        throw error("run_convergence: refinement ratio must lie in (0,1)");
    ConvergenceReport rep;
    rep.problem = prob.name;
    rep.s = pt.s;
    rep.T = cfg.T;
    const SystemState s0{prob.initial.t, prob.initial.q, prob.initial.p, prob.initial.lam};

    const double h_min = cfg.h0 * std::pow(cfg.ratio, cfg.count - 1);
    const auto [qr, pr, lr] = reference_solution(prob, s0, cfg.T, h_min, cfg.solver);

    VariableStudy vq{"q", {}, 0, 0, 0, false};
    VariableStudy vp{"p", {}, 0, 0, 0, false};
    VariableStudy vl{"lambda", {}, 0, 0, 0, false};
    for (int i = 0; i < cfg.count; ++i) {
        const double h_nominal = cfg.h0 * std::pow(cfg.ratio, i);
        const int nsteps = std::max(1, static_cast<int>(std::llround(cfg.T / h_nominal)));
        const double h = cfg.T / nsteps;
        Trajectory traj;
        try {
            traj = integrate(prob, pt, s0, h, nsteps, cfg.solver);
        } catch (const error& e) {
            throw error("run_convergence aborted at h = " + g17(h) + ": " + e.what());
        }
        for (const auto& point : traj.points) {
            rep.max_constraint_residual =
                std::max(rep.max_constraint_residual, point.phi_residual);
            rep.max_endpoint_gap = std::max(rep.max_endpoint_gap, point.endpoint_gap);
        }
        const SystemState& last = traj.points.back().state;
        vq.points.emplace_back(h, inf_norm(last.q - qr));
        vp.points.emplace_back(h, inf_norm(last.p - pr));
        vl.points.emplace_back(h, inf_norm(last.lam - lr));
    }

    const ExpectedOrders exp = expected_orders(pt);
    vq.expected = exp.order_q;
    vp.expected = exp.order_p;
    vl.expected = exp.order_lambda;
    rep.pass = true;
    for (VariableStudy* v : {&vq, &vp, &vl}) {
        const FitResult fit = fit_order_windowed(v->points);
        v->slope = fit.slope;
        v->r2 = fit.r2;
        v->pass = std::abs(v->slope - v->expected) <= cfg.slope_tol && v->r2 >= cfg.r2_min;
        rep.pass = rep.pass && v->pass;
        rep.variables.push_back(*v);
    }
    return rep;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep) {
    os << "problem,s,variable,h,error,slope,r_squared,expected_order,verdict\n";
    for (const auto& v : rep.variables)
        for (const auto& [h, e] : v.points)
            os << rep.problem << "," << rep.s << "," << v.variable << "," << g17(h) << ","
               << g17(e) << "," << g17(v.slope) << "," << g17(v.r2) << "," << v.expected << ","
               << (v.pass ? "pass" : "fail") << "\n";
}

// ---------------------------------------------------------------------------
// Internal stage orders (one-step study)
// ---------------------------------------------------------------------------

struct StageOrderReport {
    std::vector<VariableStudy> variables;  // Q, p, P, Lambda
    bool pass = false;
};

/// Solve a single stage system at shrinking h from a consistent point on the
/// exact solution and fit the decay of the internal-stage errors
///   max_i |Q_i - q(t0 + c_i h)|  etc.
/// Expected slopes for consistent data: (s+1, s+1, s-1, s).
inline StageOrderReport measure_stage_orders(const DAEProblem& prob, const PartitionedTableau& pt,
                                             double t0, double h0 = 0.2, double ratio = 0.5,
                                             int count = 7, const SolverConfig& cfg = {},
                                             double slope_tol = 0.3) {
    if (!prob.exact) throw error("measure_stage_orders: problem has no exact solution");
    const auto& exact = *prob.exact;
    auto [q0, p0, l0] = exact(t0);
    const SystemState s0{t0, q0, p0, consistent_lambda(prob, q0, p0, l0, cfg)};

    VariableStudy vQ{"Q", {}, 0, 0, pt.s + 1, false};
    VariableStudy vp{"p", {}, 0, 0, pt.s + 1, false};
    VariableStudy vP{"P", {}, 0, 0, pt.s - 1, false};
    VariableStudy vL{"Lambda", {}, 0, 0, pt.s, false};
    for (int k = 0; k < count; ++k) {
        const double h = h0 * std::pow(ratio, k);
        const StageSolution st = solve_stages(prob, pt, s0, h, cfg);
        double eQ = 0, ep = 0, eP = 0, eL = 0;
        for (int i = 1; i <= pt.s; ++i) {
            const auto [qe, pe, le] = exact(t0 + pt.first.c(i - 1) * h);
            if (i >= 2) {
                eQ = std::max(eQ, inf_norm(st.Q[i - 1] - qe));
                ep = std::max(ep, inf_norm(st.p_aux[i - 1] - pe));
                eL = std::max(eL, inf_norm(st.Lam[i - 1] - le));
            }
            eP = std::max(eP, inf_norm(st.P[i - 1] - pe));
        }
        vQ.points.emplace_back(h, eQ);
        vp.points.emplace_back(h, ep);
        vP.points.emplace_back(h, eP);
        vL.points.emplace_back(h, eL);
    }
    StageOrderReport rep;
    rep.pass = true;
    for (VariableStudy* v : {&vQ, &vp, &vP, &vL}) {
        const FitResult fit = fit_order_windowed(v->points);
        v->slope = fit.slope;
        v->r2 = fit.r2;
        v->pass = std::abs(v->slope - v->expected) <= slope_tol;
        rep.pass = rep.pass && v->pass;
        rep.variables.push_back(*v);
    }
    return rep;
}

}  // namespace plrk
