#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "banditlab/errors.hpp"

namespace banditlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ridge (lambda > 0) or minimum-norm least-squares (lambda == 0) solution.
struct Estimate {
    Vector theta_hat;
    bool is_min_norm = false;
};

/**
 * Running regularized Gram matrix V = lambda*I + sum x x^T together with its
 * inverse (pseudoinverse when lambda == 0 and the data do not span R^d), its
 * log-determinant and the response accumulator b = sum y x.
 *
 * Rank-one updates go through Sherman-Morrison; every kRefreshInterval
 * updates the inverse and log-determinant are recomputed densely. An
 * orthonormal basis of span{x_s} is kept alongside so that the lambda == 0
 * pseudoinverse is well defined even for badly scaled data: a vector counts as
 * outside the range when its residual against that basis exceeds
 * kRangeTolerance * |x|.
 */
class GramState {
public:
    static constexpr std::size_t kRefreshInterval = 256;
    static constexpr double kRangeTolerance = 1e-9;

    GramState(Eigen::Index dim, double lambda)
        : dim_(dim), lambda_(lambda), v_(Matrix::Identity(dim, dim) * lambda),
          v_inv_(Matrix::Zero(dim, dim)), b_(Vector::Zero(dim)), basis_(dim, 0) {
        if (dim < 1) throw ContractViolation("GramState: dimension must be >= 1");
        if (!(lambda >= 0.0)) throw ContractViolation("GramState: lambda must be >= 0");
        if (lambda > 0.0) {
            v_inv_ = Matrix::Identity(dim, dim) / lambda;
            logdet_ = static_cast<double>(dim) * std::log(lambda);
        }
    }

    Eigen::Index dim() const { return dim_; }
    double lambda() const { return lambda_; }
    const Matrix& v() const { return v_; }
    const Matrix& v_inv() const { return v_inv_; }
    const Vector& b() const { return b_; }
    std::size_t count() const { return count_; }
    /// Dimension of span{x_s} over all observed vectors.
    Eigen::Index rank() const { return basis_.cols(); }
    bool invertible() const { return lambda_ > 0.0 || rank() == dim_; }
    /// ln|V|; empty when lambda == 0 and the data are rank deficient.
    std::optional<double> logdet() const { return logdet_; }

    double logdet_or_throw() const {
        if (!logdet_) throw ContractViolation("GramState: log-determinant undefined (rank-deficient, lambda = 0)");
        return *logdet_;
    }

    void update(const Vector& x, double y) {
        check_dim(x);
        b_ += y * x;
        ++count_;
        const double norm = x.norm();
        if (norm == 0.0) return;

        if (outside_range_norm(x) > kRangeTolerance * norm) {
            extend_basis(x);
            v_.noalias() += x * x.transpose();
            if (lambda_ == 0.0) {
                refresh();
                return;
            }
        } else {
            v_.noalias() += x * x.transpose();
        }

        const Vector u = v_inv_ * x;
        const double s = std::max(0.0, x.dot(u));
        v_inv_.noalias() -= (u * u.transpose()) / (1.0 + s);
        if (logdet_) *logdet_ += std::log1p(s);
        if (++since_refresh_ >= kRefreshInterval) refresh();
    }

    /// x^T V^{-1} x; +infinity for directions V has never seen when lambda == 0.
    double mahalanobis_sq(const Vector& x) const {
        check_dim(x);
        if (!invertible()) {
            const double norm = x.norm();
            if (norm > 0.0 && outside_range_norm(x) > kRangeTolerance * norm)
                return std::numeric_limits<double>::infinity();
        }
        return std::max(0.0, x.dot(v_inv_ * x));
    }

    /// Replaces lambda*I by lambda_new*I and recomputes inverse and logdet densely.
    void rebase(double lambda_new) {
        if (!(lambda_new >= 0.0)) throw ContractViolation("GramState: lambda must be >= 0");
        if (lambda_new == lambda_) return;
        v_.diagonal().array() += lambda_new - lambda_;
        lambda_ = lambda_new;
        refresh();
    }

    /// Dense O(d^3) recomputation of the inverse and log-determinant.
    void refresh() {
        since_refresh_ = 0;
        if (lambda_ > 0.0) {
            const Eigen::LLT<Matrix> llt(v_);
            v_inv_ = llt.solve(Matrix::Identity(dim_, dim_));
            v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose()).eval();
            logdet_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            return;
        }
        const Eigen::Index r = rank();
        if (r == 0) {
            v_inv_.setZero();
            logdet_.reset();
            return;
        }
        const Matrix reduced = basis_.transpose() * v_ * basis_;
        const Eigen::LLT<Matrix> llt(reduced);
        const Matrix reduced_inv = llt.solve(Matrix::Identity(r, r));
        v_inv_ = basis_ * reduced_inv * basis_.transpose();
        v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose()).eval();
        if (r == dim_)
            logdet_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        else
            logdet_.reset();
    }

    /// Norm of the component of x orthogonal to span{x_s}.
    double outside_range_norm(const Vector& x) const {
        if (basis_.cols() == 0) return x.norm();
        Vector residual = x - basis_ * (basis_.transpose() * x);
        residual -= basis_ * (basis_.transpose() * residual);
        return residual.norm();
    }

private:
    void check_dim(const Vector& x) const {
        if (x.size() != dim_) throw ContractViolation("GramState: vector dimension mismatch");
    }

    void extend_basis(const Vector& x) {
        Vector residual = x;
        for (int pass = 0; pass < 2; ++pass)
            residual -= basis_ * (basis_.transpose() * residual);
        const Eigen::Index r = basis_.cols();
        basis_.conservativeResize(Eigen::NoChange, r + 1);
        basis_.col(r) = residual / residual.norm();
    }

    Eigen::Index dim_;
    double lambda_;
    Matrix v_;
    Matrix v_inv_;
    std::optional<double> logdet_;
    Vector b_;
    std::size_t count_ = 0;
    std::size_t since_refresh_ = 0;
    Matrix basis_;
};

inline Estimate solve_estimate(const GramState& gram) {
    return Estimate{gram.v_inv() * gram.b(), gram.lambda() == 0.0};
}

}  // namespace banditlab
