#include "perisolve/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "perisolve/errors.hpp"

namespace perisolve {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Element make_segment(const std::vector<Point>& nodes, int a, int b) {
    Element e;
    e.nodes = {a, b, -1};
    e.vertex_count = 2;
    const double h = nodes[b].x - nodes[a].x;
    e.measure = h;
    e.centroid = {0.5 * (nodes[a].x + nodes[b].x), 0.0};
    e.gradients[0] = {-1.0 / h, 0.0};
    e.gradients[1] = {1.0 / h, 0.0};
    return e;
}

Element make_triangle(const std::vector<Point>& nodes, int a, int b, int c) {
    Element e;
    e.nodes = {a, b, c};
    e.vertex_count = 3;
    const Point& p0 = nodes[a];
    const Point& p1 = nodes[b];
    const Point& p2 = nodes[c];
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    e.measure = 0.5 * std::abs(det);
    e.centroid = {(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
    e.gradients[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
    e.gradients[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
    e.gradients[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
    return e;
}

// Adds the symmetric local matrix `local(a, b)` (a <= b evaluated once) for
// every element, so (i, j) and (j, i) accumulate identical summands in the
// same order and the assembled matrix is exactly symmetric.
template <class Local>
SparseMatrix assemble_symmetric(const SpatialDiscretization& mesh, Local&& local) {
    Triplets triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);
    int index = 0;
    for (const Element& e : mesh.elements()) {
        for (int a = 0; a < e.vertex_count; ++a) {
            const int ia = mesh.dof_of_node(e.nodes[a]);
            if (ia < 0) continue;
            for (int b = 0; b < e.vertex_count; ++b) {
                const int ib = mesh.dof_of_node(e.nodes[b]);
                if (ib < 0) continue;
                const double value = a <= b ? local(index, e, a, b) : local(index, e, b, a);
                triplets.emplace_back(ia, ib, value);
            }
        }
        ++index;
    }
    SparseMatrix matrix(mesh.num_dofs(), mesh.num_dofs());
    matrix.setFromTriplets(triplets.begin(), triplets.end());
    matrix.makeCompressed();
    return matrix;
}

void check_element_count(const SpatialDiscretization& mesh, std::span<const double> values, const char* what) {
    if (static_cast<int>(values.size()) != mesh.num_elements()) {
        std::ostringstream msg;
        msg << what << ": expected " << mesh.num_elements() << " element values, got " << values.size();
        throw DimensionError(msg.str());
    }
}

}  // namespace

double SpatialDiscretization::domain_measure() const noexcept {
    double measure = 1.0;
    for (double l : extents_) measure *= l;
    return measure;
}

SpatialDiscretization build_mesh(int dimension, std::span<const double> extents, std::span<const int> cells) {
    if (dimension != 1 && dimension != 2) {
        throw ConfigError("mesh dimension must be 1 or 2, got " + std::to_string(dimension));
    }
    if (static_cast<int>(extents.size()) != dimension || static_cast<int>(cells.size()) != dimension) {
        throw ConfigError("mesh needs one extent and one cell count per axis");
    }
    for (int d = 0; d < dimension; ++d) {
        if (!(extents[d] > 0.0) || !std::isfinite(extents[d])) {
            throw ConfigError("mesh extents must be positive and finite");
        }
        if (cells[d] < 2) {
            throw ConfigError("mesh needs at least 2 cells per axis (got " + std::to_string(cells[d]) +
                              "), otherwise there are no interior degrees of freedom");
        }
    }

    SpatialDiscretization mesh;
    mesh.dimension_ = dimension;
    mesh.extents_.assign(extents.begin(), extents.end());
    mesh.cells_.assign(cells.begin(), cells.end());

    if (dimension == 1) {
        const int n = cells[0];
        const double h = extents[0] / n;
        for (int i = 0; i <= n; ++i) {
            mesh.nodes_.push_back({i == n ? extents[0] : i * h, 0.0});
            const bool interior = i > 0 && i < n;
            mesh.node_dofs_.push_back(interior ? static_cast<int>(mesh.dof_nodes_.size()) : -1);
            if (interior) mesh.dof_nodes_.push_back(i);
        }
        for (int i = 0; i < n; ++i) mesh.elements_.push_back(make_segment(mesh.nodes_, i, i + 1));
    } else {
        const int nx = cells[0];
        const int ny = cells[1];
        const double hx = extents[0] / nx;
        const double hy = extents[1] / ny;
        auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
        for (int j = 0; j <= ny; ++j) {
            for (int i = 0; i <= nx; ++i) {
                mesh.nodes_.push_back({i == nx ? extents[0] : i * hx, j == ny ? extents[1] : j * hy});
                const bool interior = i > 0 && i < nx && j > 0 && j < ny;
                mesh.node_dofs_.push_back(interior ? static_cast<int>(mesh.dof_nodes_.size()) : -1);
                if (interior) mesh.dof_nodes_.push_back(id(i, j));
            }
        }
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                mesh.elements_.push_back(make_triangle(mesh.nodes_, id(i, j), id(i + 1, j), id(i + 1, j + 1)));
                mesh.elements_.push_back(make_triangle(mesh.nodes_, id(i, j), id(i + 1, j + 1), id(i, j + 1)));
            }
        }
    }

    double h = 0.0;
    for (const Element& e : mesh.elements_) {
        double diameter = 0.0;
        for (int a = 0; a < e.vertex_count; ++a) {
            for (int b = a + 1; b < e.vertex_count; ++b) {
                const Point& p = mesh.nodes_[e.nodes[a]];
                const Point& q = mesh.nodes_[e.nodes[b]];
                diameter = std::max(diameter, std::hypot(p.x - q.x, p.y - q.y));
            }
        }
        h = std::max(h, diameter);
    }
    mesh.mesh_size_ = h;
    return mesh;
}

ElementValues sample_at_centroids(const SpatialDiscretization& mesh, const SpatialField& field) {
    ElementValues values;
    values.reserve(mesh.elements().size());
    for (const Element& e : mesh.elements()) values.push_back(field(e.centroid));
    return values;
}

DiffusionCoefficient::DiffusionCoefficient(Sampler sampler, double lower_bound, bool time_dependent)
    : sampler_(std::move(sampler)), lower_bound_(lower_bound), time_dependent_(time_dependent) {}

DiffusionCoefficient DiffusionCoefficient::constant(double value, double lower_bound) {
    return DiffusionCoefficient([value](double, Point, int) { return value; }, lower_bound, false);
}

DiffusionCoefficient DiffusionCoefficient::separable(double value, double time_amplitude, double space_amplitude,
                                                     double period, std::vector<double> extents,
                                                     double lower_bound) {
    auto sampler = [=](double t, Point z, int) {
        double space = std::sin(std::numbers::pi * z.x / extents[0]);
        if (extents.size() > 1) space *= std::sin(std::numbers::pi * z.y / extents[1]);
        return value * (1.0 + time_amplitude * std::sin(2.0 * std::numbers::pi * t / period)) *
               (1.0 + space_amplitude * space);
    };
    return DiffusionCoefficient(sampler, lower_bound, time_amplitude != 0.0);
}

DiffusionCoefficient DiffusionCoefficient::table(ElementValues values, double lower_bound) {
    auto shared = std::make_shared<const ElementValues>(std::move(values));
    auto sampler = [shared](double, Point, int element) {
        return shared->at(static_cast<std::size_t>(element));
    };
    return DiffusionCoefficient(sampler, lower_bound, false);
}

ElementValues DiffusionCoefficient::sample(const SpatialDiscretization& mesh, double t) const {
    if (!sampler_) throw ConfigError("diffusion coefficient is not set");
    ElementValues values;
    values.reserve(mesh.elements().size());
    int index = 0;
    for (const Element& e : mesh.elements()) values.push_back(sampler_(t, e.centroid, index++));
    return values;
}

ElementValues DiffusionCoefficient::checked_sample(const SpatialDiscretization& mesh, double t) const {
    if (!(lower_bound_ > 0.0)) {
        throw HypothesisViolation("H(a)", "ellipticity bound a0 = " + std::to_string(lower_bound_) +
                                              " is not positive");
    }
    ElementValues values = sample(mesh, t);
    for (std::size_t e = 0; e < values.size(); ++e) {
        if (!(values[e] >= lower_bound_)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "a(t, z) = " << values[e] << " < a0 = " << lower_bound_ << " at t = " << t << ", element "
                << e;
            throw HypothesisViolation("H(a)", msg.str());
        }
    }
    return values;
}

DiffusionCoefficient DiffusionCoefficient::clamped() const {
    auto inner = sampler_;
    const double a0 = lower_bound_;
    return DiffusionCoefficient([inner, a0](double t, Point z, int e) { return std::max(inner(t, z, e), a0); },
                                lower_bound_, time_dependent_);
}

SparseMatrix assemble_stiffness(const SpatialDiscretization& mesh, std::span<const double> element_coefficient) {
    check_element_count(mesh, element_coefficient, "assemble_stiffness");
    return assemble_symmetric(mesh, [&](int index, const Element& e, int a, int b) {
        const Point& ga = e.gradients[a];
        const Point& gb = e.gradients[b];
        return element_coefficient[index] * e.measure * (ga.x * gb.x + ga.y * gb.y);
    });
}

SparseMatrix assemble_mass(const SpatialDiscretization& mesh, std::span<const double> element_weight) {
    check_element_count(mesh, element_weight, "assemble_mass");
    return assemble_symmetric(mesh, [&](int index, const Element& e, int a, int b) {
        // Exact P1 mass: h/6 (2, 1) on segments, |T|/12 (2, 1) on triangles.
        const double scale = e.vertex_count == 2 ? e.measure / 6.0 : e.measure / 12.0;
        return element_weight[index] * scale * (a == b ? 2.0 : 1.0);
    });
}

SparseMatrix assemble_riesz_J(const SpatialDiscretization& mesh) {
    const ElementValues ones(static_cast<std::size_t>(mesh.num_elements()), 1.0);
    return assemble_stiffness(mesh, ones);
}

SparseMatrix assemble_B(const SpatialDiscretization& mesh, std::span<const double> m_elements) {
    check_element_count(mesh, m_elements, "assemble_B");
    for (std::size_t e = 0; e < m_elements.size(); ++e) {
        if (!(m_elements[e] >= 0.0)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "m(z) = " << m_elements[e] << " < 0 at element " << e;
            throw HypothesisViolation("H(m)", msg.str());
        }
    }
    return assemble_mass(mesh, m_elements);
}

SparseMatrix assemble_B(const SpatialDiscretization& mesh, const SpatialField& m) {
    const ElementValues values = sample_at_centroids(mesh, m);
    return assemble_B(mesh, values);
}

Vector lumped_mass(const SpatialDiscretization& mesh) {
    Vector d = Vector::Zero(mesh.num_dofs());
    for (const Element& e : mesh.elements()) {
        const double share = e.measure / e.vertex_count;
        for (int a = 0; a < e.vertex_count; ++a) {
            const int i = mesh.dof_of_node(e.nodes[a]);
            if (i >= 0) d[i] += share;
        }
    }
    return d;
}

OperatorSet::OperatorSet(std::shared_ptr<const SpatialDiscretization> mesh, ElementValues m_elements,
                         DiffusionCoefficient diffusion)
    : mesh_(std::move(mesh)), m_elements_(std::move(m_elements)), diffusion_(std::move(diffusion)) {
    if (!mesh_) throw ConfigError("operator set needs a mesh");
    J_ = assemble_riesz_J(*mesh_);
    B_ = assemble_B(*mesh_, m_elements_);
    const ElementValues ones(static_cast<std::size_t>(mesh_->num_elements()), 1.0);
    M_ = assemble_mass(*mesh_, ones);
    D_ = lumped_mass(*mesh_);
    diffusion_.checked_sample(*mesh_, 0.0);

    auto factor = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(J_);
    if (factor->info() != Eigen::Success) throw NumericalError("Cholesky factorization of J failed");
    J_factor_ = std::move(factor);
}

void OperatorSet::check_size(const Vector& v) const {
    if (v.size() != num_dofs()) {
        throw DimensionError("vector of length " + std::to_string(v.size()) + " does not match " +
                             std::to_string(num_dofs()) + " dofs");
    }
}

double OperatorSet::inner_product_X(const Vector& u, const Vector& v) const {
    check_size(u);
    check_size(v);
    return u.dot(J_ * v);
}

double OperatorSet::inner_product_H(const Vector& u, const Vector& v) const {
    check_size(u);
    check_size(v);
    return u.dot(M_ * v);
}

double OperatorSet::norm_X(const Vector& u) const { return std::sqrt(std::max(0.0, inner_product_X(u, u))); }
double OperatorSet::norm_H(const Vector& u) const { return std::sqrt(std::max(0.0, inner_product_H(u, u))); }

Vector OperatorSet::solve_J(const Vector& r) const {
    check_size(r);
    return J_factor_->solve(r);
}

double OperatorSet::norm_Xstar(const Vector& r) const {
    return std::sqrt(std::max(0.0, r.dot(solve_J(r))));
}

SparseMatrix diagonal_matrix(const Vector& diagonal) {
    Triplets triplets;
    for (Eigen::Index i = 0; i < diagonal.size(); ++i) triplets.emplace_back(i, i, diagonal[i]);
    SparseMatrix matrix(diagonal.size(), diagonal.size());
    matrix.setFromTriplets(triplets.begin(), triplets.end());
    return matrix;
}

double max_generalized_eigenvalue(const OperatorSet& ops, const SparseMatrix& W, int iterations) {
    // Power iteration on J^{-1} W in the W-inner product.
    Vector x = Vector::Ones(ops.num_dofs());
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector y = ops.solve_J(W * x);
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        const Vector Wy = W * y;
        const double rayleigh = y.dot(Wy) / std::max(y.dot(ops.J() * y), 1e-300);
        x = y / norm;
        if (it > 10 && std::abs(rayleigh - lambda) <= 1e-14 * std::abs(rayleigh)) {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
    }
    return lambda;
}

}  // namespace perisolve
