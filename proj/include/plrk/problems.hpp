#pragma once

// Test problems in the Hamiltonian-with-linear-constraints form
//   qdot = dH/dp,  pdot = -dH/dq + lambda_a mu^a,  0 = mu^a . dH/dp
// plus one manufactured system with a closed-form target solution.

#include "plrk/common.hpp"
#include "plrk/dae.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace plrk {

/// Hamiltonian + constraint one-forms; everything needed to assemble the
/// partitioned DAE and its partials.
struct NonholonomicSpec {
    std::string name;
    int n = 0, m = 0;
    std::function<double(const Vector&, const Vector&)> H;
    std::function<Vector(const Vector&, const Vector&)> dH_dq, dH_dp;       // n
    std::function<Matrix(const Vector&, const Vector&)> d2H_qq, d2H_pq, d2H_pp;  // n x n
    std::function<Matrix(const Vector&)> mu;                                // m x n
    /// Jacobian of row alpha of mu with respect to q (n x n, row index i of
    /// mu^alpha_i down the rows).
    std::function<Matrix(const Vector&, int)> dmu_dq;
};

/// Generic assembly of f, g, phi and their partials from (H, mu).
inline DAEProblem assemble(const NonholonomicSpec& spec) {
    DAEProblem p;
    p.name = spec.name;
    p.n = spec.n;
    p.m = spec.m;
    p.f = [spec](const Vector& q, const Vector& pp) { return spec.dH_dp(q, pp); };
    p.g = [spec](const Vector& q, const Vector& pp, const Vector& lam) {
        Vector out = -spec.dH_dq(q, pp);
        const Matrix mu = spec.mu(q);
        out += mu.transpose() * lam;
        return out;
    };
    p.phi = [spec](const Vector& q, const Vector& pp) {
        return Vector(spec.mu(q) * spec.dH_dp(q, pp));
    };
    p.d1f = [spec](const Vector& q, const Vector& pp) { return spec.d2H_pq(q, pp); };
    p.d2f = [spec](const Vector& q, const Vector& pp) { return spec.d2H_pp(q, pp); };
    p.d1g = [spec](const Vector& q, const Vector& pp, const Vector& lam) {
        Matrix out = -spec.d2H_qq(q, pp);
        for (int a = 0; a < spec.m; ++a) out += lam(a) * spec.dmu_dq(q, a);
        return out;
    };
    p.d2g = [spec](const Vector& q, const Vector& pp, const Vector&) {
        return Matrix(-spec.d2H_pq(q, pp).transpose());
    };
    p.d3g = [spec](const Vector& q, const Vector&, const Vector&) {
        return Matrix(spec.mu(q).transpose());
    };
    p.d1phi = [spec](const Vector& q, const Vector& pp) {
        const Vector fp = spec.dH_dp(q, pp);
        Matrix out = spec.mu(q) * spec.d2H_pq(q, pp);
        // d phi^a / d q_j picks up sum_i (d mu^a_i / d q_j) f_i.
        for (int a = 0; a < spec.m; ++a)
            out.row(a) += (spec.dmu_dq(q, a).transpose() * fp).transpose();
        return out;
    };
    p.d2phi = [spec](const Vector& q, const Vector& pp) {
        return Matrix(spec.mu(q) * spec.d2H_pp(q, pp));
    };
    return p;
}

/// Free particle with the linear nonholonomic constraint zdot = y xdot:
/// H = |p|^2 / 2, mu = (-y, 0, 1). Closed-form solution attached.
inline DAEProblem nonholonomic_particle() {
    NonholonomicSpec spec;
    spec.name = "particle";
    spec.n = 3;
    spec.m = 1;
    spec.H = [](const Vector&, const Vector& p) { return 0.5 * p.squaredNorm(); };
    spec.dH_dq = [](const Vector&, const Vector&) { return Vector(Vector::Zero(3)); };
    spec.dH_dp = [](const Vector&, const Vector& p) { return p; };
    spec.d2H_qq = [](const Vector&, const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
    spec.d2H_pq = [](const Vector&, const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
    spec.d2H_pp = [](const Vector&, const Vector&) { return Matrix(Matrix::Identity(3, 3)); };
    spec.mu = [](const Vector& q) {
        Matrix mu(1, 3);
        mu << -q(1), 0.0, 1.0;
        return mu;
    };
    spec.dmu_dq = [](const Vector&, int) {
        Matrix d = Matrix::Zero(3, 3);
        d(0, 1) = -1.0;  // d(mu_x)/dy
        return d;
    };
    DAEProblem p = assemble(spec);

    // With p_y = b constant: y = y0 + b t, p_x = cc / sqrt(1 + y^2),
    // x = x0 + (cc/b)(asinh y - asinh y0), z = z0 + (cc/b)(sqrt(1+y^2) -
    // sqrt(1+y0^2)), p_z = y p_x, lambda = b p_x / (1 + y^2).
    const double x0 = 0.0, y0 = 0.0, z0 = 0.0, px0 = 1.0, b = 1.0;
    const double cc = px0 * std::sqrt(1.0 + y0 * y0);
    p.exact = [=](double t) {
        const double y = y0 + b * t;
        const double root = std::sqrt(1.0 + y * y);
        const double px = cc / root;
        Vector q(3), pp(3), lam(1);
        q << x0 + cc / b * (std::asinh(y) - std::asinh(y0)), y,
            z0 + cc / b * (root - std::sqrt(1.0 + y0 * y0));
        pp << px, b, y * px;
        lam << b * px / (1.0 + y * y);
        return std::make_tuple(q, pp, lam);
    };
    p.initial.t = 0.0;
    p.initial.q = Vector::Zero(3);
    p.initial.p = Vector(3);
    p.initial.p << px0, b, y0 * px0;
    p.initial.lam = Vector(1);
    p.initial.lam << b * px0 / (1.0 + y0 * y0);
    return p;
}

/// Manufactured system with target q = (sin wt, cos wt),
/// p = (-sin wt cos wt, cos wt), lambda = sin wt and constraint
/// phi = p1 + q1 p2. Forcing terms are expressed through q so the system
/// stays autonomous.
inline DAEProblem manufactured_problem(double omega) {
    if (omega == 0.0) throw error("manufactured_problem: omega must be nonzero");
    const double w = omega;
    DAEProblem p;
    p.name = "manufactured";
    p.n = 2;
    p.m = 1;
    p.f = [w](const Vector& q, const Vector& pp) {
        Vector out(2);
        out << w * q(1) + pp(0) + q(0) * q(1), -w * q(0) + pp(1) - q(1);
        return out;
    };
    p.g = [w](const Vector& q, const Vector& pp, const Vector& lam) {
        Vector out(2);
        out << w * (q(0) * q(0) - q(1) * q(1)) + 0.5 * (pp(0) + q(0) * q(1)) - q(0) + lam(0),
            -w * q(0) - q(0) * q(0) + lam(0) * q(0);
        return out;
    };
    p.phi = [](const Vector& q, const Vector& pp) {
        Vector out(1);
        out << pp(0) + q(0) * pp(1);
        return out;
    };
    p.d1f = [w](const Vector& q, const Vector&) {
        Matrix out(2, 2);
        out << q(1), w + q(0), -w, -1.0;
        return out;
    };
    p.d2f = [](const Vector&, const Vector&) { return Matrix(Matrix::Identity(2, 2)); };
    p.d1g = [w](const Vector& q, const Vector&, const Vector& lam) {
        Matrix out(2, 2);
        out << 2.0 * w * q(0) + 0.5 * q(1) - 1.0, -2.0 * w * q(1) + 0.5 * q(0),
            -w - 2.0 * q(0) + lam(0), 0.0;
        return out;
    };
    p.d2g = [](const Vector&, const Vector&, const Vector&) {
        Matrix out = Matrix::Zero(2, 2);
        out(0, 0) = 0.5;
        return out;
    };
    p.d3g = [](const Vector& q, const Vector&, const Vector&) {
        Matrix out(2, 1);
        out << 1.0, q(0);
        return out;
    };
    p.d1phi = [](const Vector&, const Vector& pp) {
        Matrix out(1, 2);
        out << pp(1), 0.0;
        return out;
    };
    p.d2phi = [](const Vector& q, const Vector&) {
        Matrix out(1, 2);
        out << 1.0, q(0);
        return out;
    };
    p.exact = [w](double t) {
        const double sn = std::sin(w * t), cs = std::cos(w * t);
        Vector q(2), pp(2), lam(1);
        q << sn, cs;
        pp << -sn * cs, cs;
        lam << sn;
        return std::make_tuple(q, pp, lam);
    };
    p.initial.t = 0.0;
    p.initial.q = Vector(2);
    p.initial.q << 0.0, 1.0;
    p.initial.p = Vector(2);
    p.initial.p << 0.0, 1.0;
    p.initial.lam = Vector::Zero(1);
    return p;
}

/// Knife edge on an inclined plane: coordinates (x, y, theta), unit masses,
/// V = -x, blade constraint xdot sin(theta) - ydot cos(theta) = 0.
/// No closed form attached; convergence studies use a fine-step reference.
inline DAEProblem knife_edge() {
    NonholonomicSpec spec;
    spec.name = "knife-edge";
    spec.n = 3;
    spec.m = 1;
    spec.H = [](const Vector& q, const Vector& p) { return 0.5 * p.squaredNorm() - q(0); };
    spec.dH_dq = [](const Vector&, const Vector&) {
        Vector v(3);
        v << -1.0, 0.0, 0.0;
        return v;
    };
    spec.dH_dp = [](const Vector&, const Vector& p) { return p; };
    spec.d2H_qq = [](const Vector&, const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
    spec.d2H_pq = [](const Vector&, const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
    spec.d2H_pp = [](const Vector&, const Vector&) { return Matrix(Matrix::Identity(3, 3)); };
    spec.mu = [](const Vector& q) {
        Matrix mu(1, 3);
        mu << std::sin(q(2)), -std::cos(q(2)), 0.0;
        return mu;
    };
    spec.dmu_dq = [](const Vector& q, int) {
        Matrix d = Matrix::Zero(3, 3);
        d(0, 2) = std::cos(q(2));
        d(1, 2) = std::sin(q(2));
        return d;
    };
    DAEProblem p = assemble(spec);
    const double theta0 = 0.3;
    p.initial.t = 0.0;
    p.initial.q = Vector(3);
    p.initial.q << 0.0, 0.0, theta0;
    p.initial.p = Vector(3);
    p.initial.p << std::cos(theta0), std::sin(theta0), 1.0;  // along the blade
    p.initial.lam = consistent_lambda(p, p.initial.q, p.initial.p, Vector::Zero(1));
    return p;
}

/// Registry used by the command line: particle | manufactured | knife-edge.
inline DAEProblem make_problem(const std::string& name, double omega = 2.5) {
    if (name == "particle") return nonholonomic_particle();
    if (name == "manufactured") return manufactured_problem(omega);
    if (name == "knife-edge") return knife_edge();
    throw error("unknown problem '" + name + "' (expected particle|manufactured|knife-edge)");
}

inline std::vector<std::string> problem_names() {
    return {"particle", "manufactured", "knife-edge"};
}

}  // namespace plrk
