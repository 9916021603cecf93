#include "perisolve/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perisolve/errors.hpp"

namespace perisolve {

namespace {

double pivot_ratio_of(const Eigen::SimplicialLDLT<SparseMatrix>& factor) {
    const Vector d = factor.vectorD();
    if (d.size() == 0) return 1.0;
    const double lo = d.minCoeff();
    const double hi = d.maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace

bool is_positive_definite(const SparseMatrix& matrix, double relative_tolerance) {
    Eigen::SimplicialLDLT<SparseMatrix> factor(matrix);
    if (factor.info() != Eigen::Success) return false;
    const Vector d = factor.vectorD();
    if (d.size() == 0) return false;
    const double hi = d.cwiseAbs().maxCoeff();
    return hi > 0.0 && d.minCoeff() > relative_tolerance * hi;
}

RegularizedOperator::RegularizedOperator(std::shared_ptr<const OperatorSet> operators, double epsilon)
    : operators_(std::move(operators)), epsilon_(epsilon) {
    if (!operators_) throw ConfigError("regularized operator needs an operator set");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("regularization parameter must be a finite nonnegative number");
    }
    if (epsilon == 0.0) {
        if (!is_positive_definite(operators_->B())) {
            throw DegenerateOperator("eps = 0 requested but B is singular (m vanishes on part of the domain)");
        }
        matrix_ = operators_->B();
    } else {
        matrix_ = epsilon * operators_->J() + operators_->B();
    }
    matrix_.makeCompressed();
    for (int col = 0; col < matrix_.outerSize(); ++col) {
        double sum = 0.0;
        for (SparseMatrix::InnerIterator it(matrix_, col); it; ++it) sum += std::abs(it.value());
        matrix_norm_ = std::max(matrix_norm_, sum);
    }
    auto factor = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(matrix_);
    if (factor->info() != Eigen::Success) {
        throw NumericalError("LDL^T factorization of eps J + B failed");
    }
    pivot_ratio_ = pivot_ratio_of(*factor);
    if (!std::isfinite(pivot_ratio_)) {
        std::ostringstream msg;
        msg << "eps J + B is not positive definite (eps = " << epsilon << ")";
        throw NumericalError(msg.str());
    }
    factor_ = std::move(factor);
}

Vector RegularizedOperator::apply(const Vector& y) const {
    if (y.size() != matrix_.rows()) throw DimensionError("apply: vector length does not match dof count");
    return matrix_ * y;
}

Vector RegularizedOperator::solve(const Vector& w) const {
    if (w.size() != matrix_.rows()) throw DimensionError("solve: vector length does not match dof count");
    Vector x = factor_->solve(w);
    Vector r = w - matrix_ * x;
    x += factor_->solve(r);
    r = w - matrix_ * x;
    // Normwise backward error, with the 1-norm bounding the 2-norm of a symmetric matrix.
    const double scale = matrix_norm_ * x.norm() + w.norm();
    if (r.norm() > 1e-10 * scale && r.norm() > 1e-300) {
        std::ostringstream msg;
        msg.precision(3);
        msg << "solve with eps J + B lost accuracy: backward error " << r.norm() / scale
            << ", pivot ratio " << pivot_ratio_;
        throw NumericalError(msg.str());
    }
    return x;
}

double RegularizedOperator::inner_product_Vstar(const Vector& u, const Vector& v) const {
    return solve(u).dot(v);
}

double RegularizedOperator::norm_Vstar(const Vector& u) const {
    return std::sqrt(std::max(0.0, inner_product_Vstar(u, u)));
}

double RegularizedOperator::state_norm(const Vector& y) const {
    return std::sqrt(std::max(0.0, y.dot(apply(y))));
}

}  // namespace perisolve
