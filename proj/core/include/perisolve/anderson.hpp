#pragma once

#include <deque>

#include "perisolve/types.hpp"

namespace perisolve {

/// Type-II Anderson mixing for fixed-point maps x = G(x).
///
/// Each call to `next(x, gx)` takes the current iterate and its image and
/// returns the next iterate. With depth 0 it reduces to relaxed Picard
/// iteration x + beta (G(x) - x).
class AndersonMixer {
public:
    explicit AndersonMixer(int depth, double relaxation = 1.0);

    Vector next(const Vector& x, const Vector& gx);
    void reset();

    int depth() const noexcept { return depth_; }
    int history_size() const noexcept { return static_cast<int>(residual_diffs_.size()); }

private:
    int depth_;
    double relaxation_;
    Vector last_x_;
    Vector last_gx_;
    Vector last_residual_;
    std::deque<Vector> residual_diffs_;
    std::deque<Vector> image_diffs_;
};

}  // namespace perisolve
