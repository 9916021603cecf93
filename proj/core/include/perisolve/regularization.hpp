#pragma once

#include <memory>

#include "perisolve/discretization.hpp"
#include "perisolve/types.hpp"

namespace perisolve {

/// The elliptic regularization eps J + B of the weighted mass operator,
/// factorized once. It induces the inner product (u, v)_* = <(eps J + B)^{-1} u, v>
/// on covectors.
///
/// eps = 0 is accepted only when B itself is positive definite; otherwise the
/// constructor throws DegenerateOperator. Instances are immutable and may be
/// shared across threads.
class RegularizedOperator {
public:
    RegularizedOperator(std::shared_ptr<const OperatorSet> operators, double epsilon);

    double epsilon() const noexcept { return epsilon_; }
    const OperatorSet& operators() const noexcept { return *operators_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }

    /// (eps J + B) y.
    Vector apply(const Vector& y) const;

    /// (eps J + B)^{-1} w, with residual at most 1e-10 ||w||.
    Vector solve(const Vector& w) const;

    double inner_product_Vstar(const Vector& u, const Vector& v) const;
    double norm_Vstar(const Vector& u) const;

    /// |(eps J + B) y|_* = sqrt(y^T (eps J + B) y), without a solve.
    double state_norm(const Vector& y) const;

    /// Ratio of the largest to the smallest pivot of the LDL^T factorization.
    double pivot_ratio() const noexcept { return pivot_ratio_; }

private:
    std::shared_ptr<const OperatorSet> operators_;
    double epsilon_ = 0.0;
    SparseMatrix matrix_;
    std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> factor_;
    double pivot_ratio_ = 1.0;
    double matrix_norm_ = 0.0;
};

/// True when the LDL^T pivots of a symmetric matrix are all above
/// `relative_tolerance` times the largest one.
bool is_positive_definite(const SparseMatrix& matrix, double relative_tolerance = 1e-12);

}  // namespace perisolve
