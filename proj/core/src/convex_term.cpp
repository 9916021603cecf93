#include "perisolve/convex_term.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "perisolve/errors.hpp"

namespace perisolve {

double Interval::distance(double w) const noexcept {
    if (w < lo) return lo - w;
    if (w > hi) return w - hi;
    return 0.0;
}

ConvexTerm ConvexTerm::scaled_abs(double scale) {
    if (!(scale > 0.0)) throw ConfigError("scaled_abs needs a positive scale");
    return ConvexTerm(Kind::scaled_abs, scale);
}

ConvexTerm ConvexTerm::from_name(const std::string& name, double scale) {
    if (name == "zero") return zero();
    if (name == "abs") return abs();
    if (name == "scaled_abs") return scaled_abs(scale);
    if (name == "half_square") return half_square();
    if (name == "positive_part_squared") return positive_part_squared();
    throw ConfigError("unknown convex term '" + name +
                      "' (expected zero, abs, scaled_abs, half_square or positive_part_squared)");
}

std::string ConvexTerm::name() const {
    switch (kind_) {
        case Kind::zero: return "zero";
        case Kind::scaled_abs: return scale_ == 1.0 ? "abs" : "scaled_abs";
        case Kind::half_square: return "half_square";
        case Kind::positive_part_squared: return "positive_part_squared";
    }
    return "unknown";
}

double ConvexTerm::value(double x) const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::scaled_abs: return scale_ * std::abs(x);
        case Kind::half_square: return 0.5 * x * x;
        case Kind::positive_part_squared: {
            const double p = std::max(0.0, x);
            return p * p;
        }
    }
    return 0.0;
}

double ConvexTerm::prox(double lambda, double x) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("prox needs lambda > 0");
    switch (kind_) {
        case Kind::zero: return x;
        case Kind::scaled_abs: {
            const double threshold = lambda * scale_;
            if (x > threshold) return x - threshold;
            if (x < -threshold) return x + threshold;
            return 0.0;
        }
        case Kind::half_square: return x / (1.0 + lambda);
        case Kind::positive_part_squared: return x > 0.0 ? x / (1.0 + 2.0 * lambda) : x;
    }
    return x;
}

double ConvexTerm::prox_slope(double lambda, double x) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("prox needs lambda > 0");
    switch (kind_) {
        case Kind::zero: return 1.0;
        case Kind::scaled_abs: return std::abs(x) > lambda * scale_ ? 1.0 : 0.0;
        case Kind::half_square: return 1.0 / (1.0 + lambda);
        case Kind::positive_part_squared: return x > 0.0 ? 1.0 / (1.0 + 2.0 * lambda) : 1.0;
    }
    return 1.0;
}

Interval ConvexTerm::subdifferential(double x) const {
    switch (kind_) {
        case Kind::zero: return {0.0, 0.0};
        case Kind::scaled_abs:
            if (x > 0.0) return {scale_, scale_};
            if (x < 0.0) return {-scale_, -scale_};
            return {-scale_, scale_};
        case Kind::half_square: return {x, x};
        case Kind::positive_part_squared: {
            const double slope = 2.0 * std::max(0.0, x);
            return {slope, slope};
        }
    }
    return {0.0, 0.0};
}

double ConvexTerm::growth_constant() const noexcept {
    switch (kind_) {
        case Kind::zero: return 1.0;
        case Kind::scaled_abs: return scale_;
        case Kind::half_square: return 1.0;
        case Kind::positive_part_squared: return 2.0;
    }
    return 1.0;
}

}  // namespace perisolve
