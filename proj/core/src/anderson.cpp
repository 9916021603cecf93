#include "perisolve/anderson.hpp"

#include "perisolve/errors.hpp"

namespace perisolve {

AndersonMixer::AndersonMixer(int depth, double relaxation) : depth_(depth), relaxation_(relaxation) {
    if (depth < 0) throw ConfigError("Anderson depth must be nonnegative");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
}

void AndersonMixer::reset() {
    last_x_.resize(0);
    residual_diffs_.clear();
    image_diffs_.clear();
}

Vector AndersonMixer::next(const Vector& x, const Vector& gx) {
    const Vector residual = gx - x;
    if (depth_ > 0 && last_x_.size() == x.size()) {
        residual_diffs_.push_back(residual - last_residual_);
        image_diffs_.push_back(gx - last_gx_);
        if (static_cast<int>(residual_diffs_.size()) > depth_) {
            residual_diffs_.pop_front();
            image_diffs_.pop_front();
        }
    }
    last_x_ = x;
    last_gx_ = gx;
    last_residual_ = residual;

    const auto m = static_cast<Eigen::Index>(residual_diffs_.size());
    if (m == 0) return x + relaxation_ * residual;

    DenseMatrix dF(x.size(), m);
    DenseMatrix dG(x.size(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
        dF.col(j) = residual_diffs_[static_cast<std::size_t>(j)];
        dG.col(j) = image_diffs_[static_cast<std::size_t>(j)];
    }
    const Vector gamma = dF.completeOrthogonalDecomposition().solve(residual);
    if (!gamma.allFinite()) {
        reset();
        return x + relaxation_ * residual;
    }
    // x_{k+1} = (1 - beta)(x - dX gamma) + beta (G(x) - dG gamma), with dX = dG - dF.
    const Vector mixed_image = gx - dG * gamma;
    const Vector mixed_x = x - (dG - dF) * gamma;
    return (1.0 - relaxation_) * mixed_x + relaxation_ * mixed_image;
}

}  // namespace perisolve
