#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "perisolve/types.hpp"

namespace perisolve {

/// A P1 element: a segment (1D) or a triangle (2D).
struct Element {
    std::array<int, 3> nodes{-1, -1, -1};
    int vertex_count = 0;
    double measure = 0.0;
    Point centroid;
    /// Constant gradients of the local hat functions; only `x` is used in 1D.
    std::array<Point, 3> gradients{};
};

/// Uniform P1 mesh of an interval (0, l) or a rectangle (0, lx) x (0, ly).
///
/// Boundary nodes carry homogeneous Dirichlet data and are not degrees of
/// freedom. Dof vectors are indexed by interior nodes in lexicographic order.
class SpatialDiscretization {
public:
    int dimension() const noexcept { return dimension_; }
    const std::vector<double>& extents() const noexcept { return extents_; }
    const std::vector<int>& cells() const noexcept { return cells_; }

    /// Largest element diameter.
    double mesh_size() const noexcept { return mesh_size_; }
    double domain_measure() const noexcept;

    int num_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
    int num_dofs() const noexcept { return static_cast<int>(dof_nodes_.size()); }
    int num_elements() const noexcept { return static_cast<int>(elements_.size()); }

    const std::vector<Point>& nodes() const noexcept { return nodes_; }
    const std::vector<Element>& elements() const noexcept { return elements_; }

    /// Dof index of a node, or -1 on the boundary.
    int dof_of_node(int node) const { return node_dofs_.at(static_cast<std::size_t>(node)); }
    int node_of_dof(int dof) const { return dof_nodes_.at(static_cast<std::size_t>(dof)); }
    Point dof_point(int dof) const { return nodes_[static_cast<std::size_t>(node_of_dof(dof))]; }

    friend SpatialDiscretization build_mesh(int dimension, std::span<const double> extents,
                                            std::span<const int> cells);

private:
    int dimension_ = 0;
    std::vector<double> extents_;
    std::vector<int> cells_;
    double mesh_size_ = 0.0;
    std::vector<Point> nodes_;
    std::vector<int> node_dofs_;
    std::vector<int> dof_nodes_;
    std::vector<Element> elements_;
};

/// Builds a uniform mesh with `cells[d]` cells along axis d. Throws
/// ConfigError for nonpositive extents, fewer than two cells per axis or a
/// dimension other than 1 or 2.
SpatialDiscretization build_mesh(int dimension, std::span<const double> extents,
                                 std::span<const int> cells);

/// Per-element samples of a coefficient, taken at element centroids.
using ElementValues = std::vector<double>;

using SpatialField = std::function<double(Point)>;

ElementValues sample_at_centroids(const SpatialDiscretization& mesh, const SpatialField& field);

/// Time-dependent diffusion coefficient a(t, z) with its ellipticity bound a0.
class DiffusionCoefficient {
public:
    using Sampler = std::function<double(double t, Point z, int element)>;

    DiffusionCoefficient() = default;
    DiffusionCoefficient(Sampler sampler, double lower_bound, bool time_dependent);

    static DiffusionCoefficient constant(double value, double lower_bound);
    static DiffusionCoefficient constant(double value) { return constant(value, value); }
    /// a(t, z) = value (1 + time_amplitude sin(2 pi t / period)) (1 + space_amplitude prod_d sin(pi z_d / l_d)).
    static DiffusionCoefficient separable(double value, double time_amplitude, double space_amplitude,
                                          double period, std::vector<double> extents, double lower_bound);
    /// Time-independent, one value per element.
    static DiffusionCoefficient table(ElementValues values, double lower_bound);

    double lower_bound() const noexcept { return lower_bound_; }
    bool time_dependent() const noexcept { return time_dependent_; }

    /// Raw midpoint samples; no hypothesis check.
    ElementValues sample(const SpatialDiscretization& mesh, double t) const;

    /// Midpoint samples, throwing HypothesisViolation("H(a)") if a sample is
    /// below a0 or a0 is not positive.
    ElementValues checked_sample(const SpatialDiscretization& mesh, double t) const;

    /// Copy whose samples are clamped from below by a0.
    DiffusionCoefficient clamped() const;

private:
    Sampler sampler_;
    double lower_bound_ = 0.0;
    bool time_dependent_ = false;
};

/// P1 stiffness matrix of the bilinear form int c Du.Dv over interior dofs,
/// with c constant per element.
SparseMatrix assemble_stiffness(const SpatialDiscretization& mesh, std::span<const double> element_coefficient);

/// P1 consistent mass matrix of int w u v over interior dofs, w constant per element.
SparseMatrix assemble_mass(const SpatialDiscretization& mesh, std::span<const double> element_weight);

/// The Riesz map of H^1_0 with the gradient inner product.
SparseMatrix assemble_riesz_J(const SpatialDiscretization& mesh);

/// m-weighted mass matrix; throws HypothesisViolation("H(m)") on a negative sample.
SparseMatrix assemble_B(const SpatialDiscretization& mesh, std::span<const double> m_elements);
SparseMatrix assemble_B(const SpatialDiscretization& mesh, const SpatialField& m);

/// Row sums of the full P1 mass matrix (boundary columns included) restricted to interior rows.
Vector lumped_mass(const SpatialDiscretization& mesh);

/// The assembled discrete evolution triple together with the weighted operator B.
///
/// J, B, M are symmetric by construction. `D` is the row-sum lumped mass used
/// for nodal pairings of the multivalued term.
class OperatorSet {
public:
    OperatorSet(std::shared_ptr<const SpatialDiscretization> mesh, ElementValues m_elements,
                DiffusionCoefficient diffusion);

    const SpatialDiscretization& mesh() const noexcept { return *mesh_; }
    std::shared_ptr<const SpatialDiscretization> mesh_ptr() const noexcept { return mesh_; }

    const SparseMatrix& J() const noexcept { return J_; }
    const SparseMatrix& B() const noexcept { return B_; }
    const SparseMatrix& M() const noexcept { return M_; }
    const Vector& D() const noexcept { return D_; }
    const ElementValues& m_elements() const noexcept { return m_elements_; }
    const DiffusionCoefficient& diffusion() const noexcept { return diffusion_; }
    int num_dofs() const noexcept { return static_cast<int>(D_.size()); }

    double inner_product_X(const Vector& u, const Vector& v) const;
    double inner_product_H(const Vector& u, const Vector& v) const;
    double norm_X(const Vector& u) const;
    double norm_H(const Vector& u) const;

    /// sqrt(r^T J^{-1} r), the dual norm of a covector.
    double norm_Xstar(const Vector& r) const;
    Vector solve_J(const Vector& r) const;

private:
    void check_size(const Vector& v) const;

    std::shared_ptr<const SpatialDiscretization> mesh_;
    ElementValues m_elements_;
    DiffusionCoefficient diffusion_;
    SparseMatrix J_;
    SparseMatrix B_;
    SparseMatrix M_;
    Vector D_;
    std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> J_factor_;
};

SparseMatrix diagonal_matrix(const Vector& diagonal);

/// Largest eigenvalue of J^{-1} W for SPD J and PSD W, by power iteration.
/// sqrt of the result is the embedding constant of |.|_W into ||.||.
double max_generalized_eigenvalue(const OperatorSet& ops, const SparseMatrix& W, int iterations = 200);

}  // namespace perisolve
