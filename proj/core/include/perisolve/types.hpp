#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace perisolve {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// A point of the spatial domain. In 1D only `x` is used.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

}  // namespace perisolve
