#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "perisolve/convex_term.hpp"
#include "perisolve/discretization.hpp"
#include "perisolve/types.hpp"

namespace perisolve {

/// One separable mode amplitude * sin(2 pi frequency t / period + phase) * prod_d sin(wave_d pi z_d / l_d).
struct FourierMode {
    double amplitude = 1.0;
    double frequency = 1.0;
    double phase = 0.0;
    std::array<int, 2> wave{1, 1};
};

/// Right-hand side f(t, z). Converted to covectors as M times the nodal interpolant.
class Forcing {
public:
    enum class Kind { zero, fourier, table, field };

    Forcing() = default;

    static Forcing zero() { return Forcing(); }
    static Forcing fourier(std::vector<FourierMode> modes, std::vector<double> extents, double period);
    /// Nodal values given on an equispaced time grid covering [0, period]
    /// (first and last row are the same time modulo the period); linear in t.
    static Forcing nodal_table(std::vector<Vector> rows, double period);
    static Forcing field(std::function<double(double, Point)> f);

    Kind kind() const noexcept { return kind_; }
    bool is_zero() const noexcept { return kind_ == Kind::zero; }
    const std::vector<FourierMode>& modes() const noexcept { return modes_; }

    /// f(t, .) at the interior nodes.
    Vector nodal_values(const SpatialDiscretization& mesh, double t) const;

private:
    Kind kind_ = Kind::zero;
    std::vector<FourierMode> modes_;
    std::vector<double> extents_;
    double period_ = 1.0;
    std::shared_ptr<const std::vector<Vector>> table_;
    std::function<double(double, Point)> field_;
};

/// Pointwise distance of a covector to the discrete set A(t, y).
struct MembershipResidual {
    /// (sum_i D_i dist_i^p')^(1/p').
    double lp = 0.0;
    /// max_i dist_i.
    double max = 0.0;
};

/// Which element of the subdifferential interval to pick at every node.
enum class SubgradientPick { lower, upper, midpoint };

/// The discrete map A(t, y) = A1(t, y) + N_g(y) - f(t).
///
/// A1 is the diffusion form int a(t) Dy.Dh plus, when enabled, the convection
/// form int sin(y) (sum_k D_k y) h with sin(y) frozen at element centroids.
/// N_g pairs nodal subgradients with the lumped mass D, so its selections are
/// D w with w_i in dg(y_i).
class InclusionOperator {
public:
    InclusionOperator(std::shared_ptr<const OperatorSet> operators, ConvexTerm g, bool convection,
                      Forcing forcing = Forcing::zero());

    const OperatorSet& operators() const noexcept { return *operators_; }
    std::shared_ptr<const OperatorSet> operators_ptr() const noexcept { return operators_; }
    const SpatialDiscretization& mesh() const noexcept { return operators_->mesh(); }
    const ConvexTerm& g() const noexcept { return g_; }
    bool convection() const noexcept { return convection_; }
    const Forcing& forcing() const noexcept { return forcing_; }
    int num_dofs() const noexcept { return operators_->num_dofs(); }

    /// Stiffness of a(t, .). Throws HypothesisViolation("H(a)") if a(t, z) < a0 at a midpoint.
    std::shared_ptr<const SparseMatrix> diffusion_matrix(double t) const;

    /// Convection covector at y; zero when convection is off.
    Vector convection_covector(const Vector& y) const;

    Vector eval_A1(double t, const Vector& y) const;

    /// M times the nodal interpolant of f(t, .).
    Vector forcing_covector(double t) const;

    /// Nodal Yosida selection (y_i - prox(lambda, y_i)) / lambda.
    Vector yosida_selection(double lambda, const Vector& y) const;
    Vector subgradient_selection(const Vector& y, SubgradientPick pick) const;

    /// A1(t, y) + D w - f(t) with w the Yosida selection.
    Vector eval_A_selection(double t, const Vector& y, double lambda) const;

    /// Distance of w to A(t, y): r = w - A1(t, y) + f(t), q = D^{-1} r, and
    /// dist(q_i, [g'_-(y_i), g'_+(y_i)]).
    MembershipResidual membership_residual(double t, const Vector& y, const Vector& w, double p = 2.0) const;

private:
    void check_size(const Vector& v) const;

    std::shared_ptr<const OperatorSet> operators_;
    ConvexTerm g_;
    bool convection_ = false;
    Forcing forcing_;
    std::shared_ptr<const SparseMatrix> static_diffusion_;
};

/// Constants of the growth and coercivity bounds for the unshifted map A1 + N_g:
///   ||v||_{X*} <= c1 + c2 ||y||^(p-1),   <v, y> >= c3 ||y||^p - c4.
struct GrowthConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double p = 2.0;
    /// Measured relative defect of the discrete convection form, with safety factor 2.
    double convection_defect = 0.0;
    /// sqrt of the largest eigenvalue of J^{-1} D.
    double embedding_lumped = 0.0;
    double a_min = 0.0;
    double a_max = 0.0;
};

/// Random dof vector for probe-based checks. Probe `index` selects the scale
/// 10^(-1 + (index mod 5) / 2) and, for every third index, a smooth low-mode shape.
Vector random_probe(const SpatialDiscretization& mesh, std::mt19937_64& rng, int index);

/// Estimates the constants from the assembled operators. Coefficient samples
/// are taken at `times`; random probes for the convection defect use `seed`.
GrowthConstants estimate_constants(const InclusionOperator& op, std::span<const double> times, std::uint64_t seed);

}  // namespace perisolve
