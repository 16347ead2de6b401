#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace plrk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

/// Base class for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested stage count outside the supported range.
struct unsupported_order : error {
    using error::error;
};

/// A matrix that must be invertible is (numerically) singular.
/// `what()` names the offending block or carries the evaluation point.
struct singular_matrix : error {
    using error::error;
};

/// Newton iteration exhausted its budget. Carries the residual history.
struct nonconvergence : error {
    std::vector<double> residual_history;
    nonconvergence(const std::string& msg, std::vector<double> history)
        : error(msg), residual_history(std::move(history)) {}
};

/// A string operation's side condition failed.
struct inapplicable_operation : error {
    using error::error;
};

/// Residual/unknown layout mismatch in the stage system.
struct layout_error : error {
    using error::error;
};

/// The hidden-constraint block D2phi*D3g lost invertibility.
struct index_violation : error {
    using error::error;
};

/// Too few usable points for an order fit.
struct insufficient_data : error {
    using error::error;
};

/// Malformed tableau or config file.
struct io_error : error {
    using error::error;
};

/// Shortest decimal form that round-trips a double exactly.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// 1-norm condition estimate; +inf when the factorization is singular.
inline double condition_1norm(const Matrix& a) {
    if (a.rows() == 0) return 1.0;
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    const Matrix inv = lu.inverse();
    const double na = a.cwiseAbs().colwise().sum().maxCoeff();
    const double ni = inv.cwiseAbs().colwise().sum().maxCoeff();
    return na * ni;
}

inline double inf_norm(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace plrk
