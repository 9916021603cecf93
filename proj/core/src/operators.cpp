#include "perisolve/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "perisolve/errors.hpp"

namespace perisolve {

Forcing Forcing::fourier(std::vector<FourierMode> modes, std::vector<double> extents, double period) {
    if (!(period > 0.0)) throw ConfigError("forcing period must be positive");
    Forcing f;
    f.kind_ = modes.empty() ? Kind::zero : Kind::fourier;
    f.modes_ = std::move(modes);
    f.extents_ = std::move(extents);
    f.period_ = period;
    return f;
}

Forcing Forcing::nodal_table(std::vector<Vector> rows, double period) {
    if (rows.size() < 2) throw ConfigError("forcing table needs at least two time rows");
    if (!(period > 0.0)) throw ConfigError("forcing period must be positive");
    for (const Vector& row : rows) {
        if (row.size() != rows.front().size()) throw ConfigError("forcing table rows differ in length");
    }
    Forcing f;
    f.kind_ = Kind::table;
    f.period_ = period;
    f.table_ = std::make_shared<const std::vector<Vector>>(std::move(rows));
    return f;
}

Forcing Forcing::field(std::function<double(double, Point)> fn) {
    Forcing f;
    f.kind_ = Kind::field;
    f.field_ = std::move(fn);
    return f;
}

Vector Forcing::nodal_values(const SpatialDiscretization& mesh, double t) const {
    const int n = mesh.num_dofs();
    switch (kind_) {
        case Kind::zero: return Vector::Zero(n);
        case Kind::fourier: {
            Vector values = Vector::Zero(n);
            for (const FourierMode& mode : modes_) {
                const double time =
                    mode.amplitude * std::sin(2.0 * std::numbers::pi * mode.frequency * t / period_ + mode.phase);
                if (time == 0.0) continue;
                for (int i = 0; i < n; ++i) {
                    const Point z = mesh.dof_point(i);
                    double space = std::sin(mode.wave[0] * std::numbers::pi * z.x / extents_[0]);
                    if (mesh.dimension() == 2) space *= std::sin(mode.wave[1] * std::numbers::pi * z.y / extents_[1]);
                    values[i] += time * space;
                }
            }
            return values;
        }
        case Kind::table: {
            const auto& rows = *table_;
            if (rows.front().size() != n) {
                throw DimensionError("forcing table has " + std::to_string(rows.front().size()) +
                                     " columns, mesh has " + std::to_string(n) + " dofs");
            }
            const double intervals = static_cast<double>(rows.size() - 1);
            double s = std::fmod(t / period_, 1.0);
            if (s < 0.0) s += 1.0;
            const double pos = s * intervals;
            const auto k = std::min(static_cast<std::size_t>(pos), rows.size() - 2);
            const double theta = pos - static_cast<double>(k);
            return (1.0 - theta) * rows[k] + theta * rows[k + 1];
        }
        case Kind::field: {
            Vector values(n);
            for (int i = 0; i < n; ++i) values[i] = field_(t, mesh.dof_point(i));
            return values;
        }
    }
    return Vector::Zero(n);
}

InclusionOperator::InclusionOperator(std::shared_ptr<const OperatorSet> operators, ConvexTerm g, bool convection,
                                     Forcing forcing)
    : operators_(std::move(operators)), g_(g), convection_(convection), forcing_(std::move(forcing)) {
    if (!operators_) throw ConfigError("inclusion operator needs an operator set");
    if (!operators_->diffusion().time_dependent()) {
        const ElementValues a = operators_->diffusion().checked_sample(mesh(), 0.0);
        static_diffusion_ = std::make_shared<const SparseMatrix>(assemble_stiffness(mesh(), a));
    }
}

void InclusionOperator::check_size(const Vector& v) const {
    if (v.size() != num_dofs()) {
        throw DimensionError("vector of length " + std::to_string(v.size()) + " does not match " +
                             std::to_string(num_dofs()) + " dofs");
    }
}

std::shared_ptr<const SparseMatrix> InclusionOperator::diffusion_matrix(double t) const {
    if (static_diffusion_) return static_diffusion_;
    const ElementValues a = operators_->diffusion().checked_sample(mesh(), t);
    return std::make_shared<const SparseMatrix>(assemble_stiffness(mesh(), a));
}

Vector InclusionOperator::convection_covector(const Vector& y) const {
    check_size(y);
    Vector out = Vector::Zero(num_dofs());
    if (!convection_) return out;
    const SpatialDiscretization& m = mesh();
    for (const Element& e : m.elements()) {
        double mean = 0.0;
        double divergence = 0.0;
        for (int a = 0; a < e.vertex_count; ++a) {
            const int i = m.dof_of_node(e.nodes[a]);
            const double value = i >= 0 ? y[i] : 0.0;
            mean += value;
            divergence += value * (e.gradients[a].x + e.gradients[a].y);
        }
        mean /= e.vertex_count;
        // int_e phi_a = |e| / vertex_count for P1 hats.
        const double weight = std::sin(mean) * divergence * e.measure / e.vertex_count;
        for (int a = 0; a < e.vertex_count; ++a) {
            const int i = m.dof_of_node(e.nodes[a]);
            if (i >= 0) out[i] += weight;
        }
    }
    return out;
}

Vector InclusionOperator::eval_A1(double t, const Vector& y) const {
    check_size(y);
    Vector out = *diffusion_matrix(t) * y;
    if (convection_) out += convection_covector(y);
    return out;
}

Vector InclusionOperator::forcing_covector(double t) const {
    if (forcing_.is_zero()) return Vector::Zero(num_dofs());
    return operators_->M() * forcing_.nodal_values(mesh(), t);
}

Vector InclusionOperator::yosida_selection(double lambda, const Vector& y) const {
    check_size(y);
    Vector w(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) w[i] = (y[i] - g_.prox(lambda, y[i])) / lambda;
    return w;
}

Vector InclusionOperator::subgradient_selection(const Vector& y, SubgradientPick pick) const {
    check_size(y);
    Vector w(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Interval s = g_.subdifferential(y[i]);
        switch (pick) {
            case SubgradientPick::lower: w[i] = s.lo; break;
            case SubgradientPick::upper: w[i] = s.hi; break;
            case SubgradientPick::midpoint: w[i] = s.midpoint(); break;
        }
    }
    return w;
}

Vector InclusionOperator::eval_A_selection(double t, const Vector& y, double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("selection needs lambda > 0");
    Vector out = eval_A1(t, y);
    if (!g_.is_zero()) out += operators_->D().cwiseProduct(yosida_selection(lambda, y));
    if (!forcing_.is_zero()) out -= forcing_covector(t);
    return out;
}

MembershipResidual InclusionOperator::membership_residual(double t, const Vector& y, const Vector& w,
                                                          double p) const {
    check_size(w);
    const Vector r = w - eval_A1(t, y) + forcing_covector(t);
    const Vector& D = operators_->D();
    const double p_dual = p / (p - 1.0);
    MembershipResidual result;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double dist = g_.subdifferential(y[i]).distance(r[i] / D[i]);
        result.max = std::max(result.max, dist);
        sum += D[i] * std::pow(dist, p_dual);
    }
    result.lp = std::pow(sum, 1.0 / p_dual);
    return result;
}

Vector random_probe(const SpatialDiscretization& mesh, std::mt19937_64& rng, int index) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = mesh.num_dofs();
    const double scale = std::pow(10.0, -1.0 + (index % 5) * 0.5);
    Vector y(n);
    if (index % 3 == 0) {
        const double amp = scale * normal(rng);
        for (int i = 0; i < n; ++i) {
            const Point z = mesh.dof_point(i);
            double s = std::sin(std::numbers::pi * z.x / mesh.extents()[0]);
            if (mesh.dimension() == 2) s *= std::sin(std::numbers::pi * z.y / mesh.extents()[1]);
            y[i] = amp * s + 0.1 * scale * normal(rng);
        }
    } else {
        for (int i = 0; i < n; ++i) y[i] = scale * normal(rng);
    }
    return y;
}

GrowthConstants estimate_constants(const InclusionOperator& op, std::span<const double> times, std::uint64_t seed) {
    const OperatorSet& ops = op.operators();
    const SpatialDiscretization& mesh = ops.mesh();
    GrowthConstants k;
    k.p = op.g().exponent();

    k.a_min = std::numeric_limits<double>::infinity();
    k.a_max = 0.0;
    std::vector<double> sample_times(times.begin(), times.end());
    if (sample_times.empty()) sample_times.push_back(0.0);
    for (double t : sample_times) {
        for (double a : ops.diffusion().sample(mesh, t)) {
            k.a_min = std::min(k.a_min, a);
            k.a_max = std::max(k.a_max, a);
        }
    }

    // Power iteration returns a Rayleigh quotient, a lower bound of the eigenvalue.
    const double lambda_d = max_generalized_eigenvalue(ops, diagonal_matrix(ops.D()));
    k.embedding_lumped = std::sqrt(lambda_d) * (1.0 + 1e-6);

    const double a0 = ops.diffusion().lower_bound();
    const double c_hat = op.g().growth_constant();
    const double lumped_measure = ops.D().sum();
    const double c_conv = op.convection() ? std::sqrt(static_cast<double>(mesh.dimension())) * k.embedding_lumped : 0.0;
    if (op.g().is_zero()) {
        k.c1 = 0.0;
        k.c2 = k.a_max + c_conv;
    } else {
        k.c1 = c_hat * k.embedding_lumped * std::sqrt(lumped_measure);
        k.c2 = k.a_max + c_conv + c_hat * k.embedding_lumped * k.embedding_lumped;
    }

    if (op.convection()) {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int probe = 0; probe < 300; ++probe) {
            const Vector y = random_probe(mesh, rng, probe);
            const double energy = ops.inner_product_X(y, y);
            if (energy <= 0.0) continue;
            const double pairing = op.convection_covector(y).dot(y);
            worst = std::max(worst, -pairing / (a0 * energy));
        }
        k.convection_defect = 2.0 * worst;
    }
    k.c3 = a0 * (1.0 - k.convection_defect);
    k.c4 = 0.0;
    return k;
}

}  // namespace perisolve
