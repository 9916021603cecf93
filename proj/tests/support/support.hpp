#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "perisolve/problem.hpp"

namespace perisolve::testing {

inline std::filesystem::path fixture_dir() { return PERISOLVE_FIXTURE_DIR; }
inline std::filesystem::path config_dir() { return PERISOLVE_CONFIG_DIR; }

/// Values of a fixture table, one per non-comment line.
inline std::vector<double> read_fixture(const std::string& name) {
    std::ifstream in(fixture_dir() / name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        values.push_back(std::stod(line));
    }
    return values;
}

inline std::shared_ptr<const SpatialDiscretization> interval_mesh(int cells, double length = 1.0) {
    const std::vector<double> extents{length};
    const std::vector<int> counts{cells};
    return std::make_shared<const SpatialDiscretization>(build_mesh(1, extents, counts));
}

inline std::shared_ptr<const SpatialDiscretization> rectangle_mesh(int nx, int ny, double lx = 1.0, double ly = 1.0) {
    const std::vector<double> extents{lx, ly};
    const std::vector<int> counts{nx, ny};
    return std::make_shared<const SpatialDiscretization>(build_mesh(2, extents, counts));
}

/// Constant m and a, no convection, zero forcing.
inline ProblemInstance simple_instance(std::shared_ptr<const SpatialDiscretization> mesh, double m = 1.0,
                                       double a = 1.0, ConvexTerm g = ConvexTerm::zero()) {
    ProblemInstance p;
    p.m_elements.assign(static_cast<std::size_t>(mesh->num_elements()), m);
    p.mesh = std::move(mesh);
    p.diffusion = DiffusionCoefficient::constant(a);
    p.g = g;
    return p;
}

inline ElementValues indicator(const SpatialDiscretization& mesh, double lo, double hi) {
    return sample_at_centroids(mesh, [=](Point z) { return z.x > lo && z.x < hi ? 1.0 : 0.0; });
}

inline Forcing heat_forcing(double amplitude = 1.0) {
    return Forcing::fourier({FourierMode{amplitude, 1.0, 0.0, {1, 1}}}, {1.0}, 1.0);
}

}  // namespace perisolve::testing
