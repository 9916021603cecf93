#pragma once

#include <string>

namespace perisolve {

/// Closed interval [lo, hi] of slopes; the subdifferential of a scalar convex function.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double w) const noexcept { return lo <= w && w <= hi; }
    /// Distance from w to the interval, zero inside.
    double distance(double w) const noexcept;
    double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

/// Scalar convex integrand g with closed-form resolvent.
///
/// The catalog covers smooth, nonsmooth and one-sided cases:
///   zero                    g = 0
///   abs                     g = |x|
///   scaled_abs(c)           g = c |x|
///   half_square             g = x^2 / 2
///   positive_part_squared   g = max(0, x)^2
/// Each entry records the growth constants (c_hat, p) with
/// |w| <= c_hat (1 + |x|^(p-1)) for every w in dg(x).
class ConvexTerm {
public:
    enum class Kind { zero, scaled_abs, half_square, positive_part_squared };

    ConvexTerm() = default;

    static ConvexTerm zero() { return ConvexTerm(Kind::zero, 0.0); }
    static ConvexTerm abs() { return ConvexTerm(Kind::scaled_abs, 1.0); }
    static ConvexTerm scaled_abs(double scale);
    static ConvexTerm half_square() { return ConvexTerm(Kind::half_square, 1.0); }
    static ConvexTerm positive_part_squared() { return ConvexTerm(Kind::positive_part_squared, 1.0); }

    /// Catalog lookup by name ("zero", "abs", "scaled_abs", "half_square",
    /// "positive_part_squared"); `scale` is used by scaled_abs only.
    static ConvexTerm from_name(const std::string& name, double scale = 1.0);

    Kind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }
    std::string name() const;

    double value(double x) const;

    /// argmin_s (s - x)^2 / (2 lambda) + g(s). Throws std::invalid_argument for lambda <= 0.
    double prox(double lambda, double x) const;

    /// An element of the Clarke Jacobian of x -> prox(lambda, x); lies in [0, 1].
    double prox_slope(double lambda, double x) const;

    /// [g'_-(x), g'_+(x)].
    Interval subdifferential(double x) const;

    double growth_constant() const noexcept;
    double exponent() const noexcept { return 2.0; }

    bool is_zero() const noexcept { return kind_ == Kind::zero; }

private:
    ConvexTerm(Kind kind, double scale) : kind_(kind), scale_(scale) {}

    Kind kind_ = Kind::zero;
    double scale_ = 0.0;
};

}  // namespace perisolve
