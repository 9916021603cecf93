#include "app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "perisolve/errors.hpp"
#include "perisolve/verification.hpp"

namespace perisolve::app {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    if (trim(s).empty()) return parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(trim(item));
    return parts;
}

double to_double(const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError("invalid number '" + text + "'");
    return value;
}

long long to_integer(const std::string& text) {
    long long value = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError("invalid integer '" + text + "'");
    return value;
}

int to_int(const std::string& text) {
    const long long v = to_integer(text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError("integer out of range '" + text + "'");
    }
    return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& text) {
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError("invalid unsigned integer '" + text + "'");
    return value;
}

bool to_bool(const std::string& text) {
    if (text == "true" || text == "on" || text == "1") return true;
    if (text == "false" || text == "off" || text == "0") return false;
    throw ConfigError("invalid boolean '" + text + "' (expected true or false)");
}

std::vector<double> to_doubles(const std::string& text) {
    std::vector<double> out;
    for (const std::string& part : split(text, ',')) out.push_back(to_double(part));
    return out;
}

std::vector<int> to_ints(const std::string& text) {
    std::vector<int> out;
    for (const std::string& part : split(text, ',')) out.push_back(to_int(part));
    return out;
}

std::string one_of(const std::string& text, std::initializer_list<const char*> allowed) {
    std::string list;
    for (const char* a : allowed) {
        if (text == a) return text;
        list += (list.empty() ? "" : ", ") + std::string(a);
    }
    throw ConfigError("invalid value '" + text + "' (expected one of " + list + ")");
}

std::vector<FourierMode> to_modes(const std::string& text) {
    std::vector<FourierMode> modes;
    for (const std::string& item : split(text, ';')) {
        const std::vector<std::string> f = split(item, ':');
        if (f.size() < 4 || f.size() > 5) {
            throw ConfigError("invalid Fourier mode '" + item + "' (expected amplitude:frequency:phase:kx[:ky])");
        }
        FourierMode m;
        m.amplitude = to_double(f[0]);
        m.frequency = to_double(f[1]);
        m.phase = to_double(f[2]);
        m.wave[0] = to_int(f[3]);
        m.wave[1] = f.size() == 5 ? to_int(f[4]) : 1;
        modes.push_back(m);
    }
    return modes;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
    return out;
}

std::string join(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

std::string join(const std::vector<FourierMode>& modes) {
    std::string out;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const FourierMode& m = modes[i];
        out += (i ? ";" : "") + format_double(m.amplitude) + ":" + format_double(m.frequency) + ":" +
               format_double(m.phase) + ":" + std::to_string(m.wave[0]) + ":" + std::to_string(m.wave[1]);
    }
    return out;
}

std::string resolve(const std::string& text, const fs::path& base) {
    if (text.empty()) return text;
    fs::path p(text);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal().string();
}

using Setter = std::function<void(InstanceConfig&, const std::string&, const fs::path&)>;
using Getter = std::function<std::string(const InstanceConfig&)>;

struct Field {
    const char* key;
    Setter set;
    Getter get;
};

#define PERISOLVE_DOUBLE(KEY, MEMBER)                                                        \
    Field {                                                                                  \
        KEY, [](InstanceConfig& c, const std::string& v, const fs::path&) { c.MEMBER = to_double(v); }, \
            [](const InstanceConfig& c) { return format_double(c.MEMBER); }                  \
    }
#define PERISOLVE_INT(KEY, MEMBER)                                                           \
    Field {                                                                                  \
        KEY, [](InstanceConfig& c, const std::string& v, const fs::path&) { c.MEMBER = to_int(v); }, \
            [](const InstanceConfig& c) { return std::to_string(c.MEMBER); }                 \
    }
#define PERISOLVE_DOUBLES(KEY, MEMBER)                                                       \
    Field {                                                                                  \
        KEY, [](InstanceConfig& c, const std::string& v, const fs::path&) { c.MEMBER = to_doubles(v); }, \
            [](const InstanceConfig& c) { return join(c.MEMBER); }                           \
    }
#define PERISOLVE_PATH(KEY, MEMBER)                                                          \
    Field {                                                                                  \
        KEY, [](InstanceConfig& c, const std::string& v, const fs::path& b) { c.MEMBER = resolve(v, b); }, \
            [](const InstanceConfig& c) { return c.MEMBER; }                                 \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        PERISOLVE_INT("domain.dimension", dimension),
        PERISOLVE_DOUBLES("domain.extents", extents),
        {"domain.cells", [](InstanceConfig& c, const std::string& v, const fs::path&) { c.cells = to_ints(v); },
         [](const InstanceConfig& c) { return join(c.cells); }},
        PERISOLVE_DOUBLE("time.period", period),
        PERISOLVE_INT("time.steps", steps),
        {"m.kind",
         [](InstanceConfig& c, const std::string& v, const fs::path&) {
             c.m_kind = one_of(v, {"constant", "indicator", "table"});
         },
         [](const InstanceConfig& c) { return c.m_kind; }},
        PERISOLVE_DOUBLE("m.value", m_value),
        PERISOLVE_DOUBLE("m.lower", m_lower),
        PERISOLVE_DOUBLE("m.upper", m_upper),
        PERISOLVE_DOUBLE("m.inside", m_inside),
        PERISOLVE_DOUBLE("m.outside", m_outside),
        PERISOLVE_DOUBLES("m.table", m_table),
        PERISOLVE_PATH("m.table_file", m_table_file),
        {"a.kind",
         [](InstanceConfig& c, const std::string& v, const fs::path&) {
             c.a_kind = one_of(v, {"constant", "separable", "table"});
         },
         [](const InstanceConfig& c) { return c.a_kind; }},
        PERISOLVE_DOUBLE("a.value", a_value),
        PERISOLVE_DOUBLE("a.lower_bound", a_lower_bound),
        PERISOLVE_DOUBLE("a.time_amplitude", a_time_amplitude),
        PERISOLVE_DOUBLE("a.space_amplitude", a_space_amplitude),
        PERISOLVE_DOUBLES("a.table", a_table),
        PERISOLVE_PATH("a.table_file", a_table_file),
        {"convection", [](InstanceConfig& c, const std::string& v, const fs::path&) { c.convection = to_bool(v); },
         [](const InstanceConfig& c) { return std::string(c.convection ? "true" : "false"); }},
        {"g.kind",
         [](InstanceConfig& c, const std::string& v, const fs::path&) {
             c.g_kind = one_of(v, {"zero", "abs", "scaled_abs", "half_square", "positive_part_squared"});
         },
         [](const InstanceConfig& c) { return c.g_kind; }},
        PERISOLVE_DOUBLE("g.scale", g_scale),
        {"forcing.kind",
         [](InstanceConfig& c, const std::string& v, const fs::path&) {
             c.forcing_kind = one_of(v, {"zero", "fourier", "table"});
         },
         [](const InstanceConfig& c) { return c.forcing_kind; }},
        {"forcing.modes",
         [](InstanceConfig& c, const std::string& v, const fs::path&) { c.forcing_modes = to_modes(v); },
         [](const InstanceConfig& c) { return join(c.forcing_modes); }},
        PERISOLVE_PATH("forcing.table_file", forcing_table_file),
        {"solver.schedule",
         [](InstanceConfig& c, const std::string& v, const fs::path&) {
             c.schedule = one_of(v, {"harmonic", "list", "direct"});
         },
         [](const InstanceConfig& c) { return c.schedule; }},
        PERISOLVE_INT("solver.stages", stages),
        PERISOLVE_DOUBLES("solver.epsilons", epsilons),
        PERISOLVE_DOUBLE("solver.step_tolerance", step_tolerance),
        PERISOLVE_DOUBLE("solver.newton_tolerance", newton_tolerance),
        PERISOLVE_DOUBLE("solver.periodic_tolerance", periodic_tolerance),
        PERISOLVE_DOUBLE("solver.continuation_tolerance", continuation_tolerance),
        {"solver.acceleration",
         [](InstanceConfig& c, const std::string& v, const fs::path&) {
             c.acceleration = one_of(v, {"plain", "relaxed", "anderson"});
         },
         [](const InstanceConfig& c) { return c.acceleration; }},
        PERISOLVE_DOUBLE("solver.relaxation", relaxation),
        PERISOLVE_INT("solver.anderson_depth", anderson_depth),
        PERISOLVE_INT("solver.max_poincare", max_poincare),
        PERISOLVE_INT("solver.max_inner", max_inner),
        PERISOLVE_INT("solver.max_newton", max_newton),
        PERISOLVE_DOUBLE("solver.p", exponent),
        {"output.directory",
         [](InstanceConfig& c, const std::string& v, const fs::path&) { c.output_directory = v; },
         [](const InstanceConfig& c) { return c.output_directory; }},
        {"seed", [](InstanceConfig& c, const std::string& v, const fs::path&) { c.seed = to_u64(v); },
         [](const InstanceConfig& c) { return std::to_string(c.seed); }},
    };
    return table;
}

#undef PERISOLVE_DOUBLE
#undef PERISOLVE_INT
#undef PERISOLVE_DOUBLES
#undef PERISOLVE_PATH

const Field* find_field(const std::string& key) {
    for (const Field& f : fields()) {
        if (key == f.key) return &f;
    }
    return nullptr;
}

std::vector<double> read_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read table file '" + path + "'");
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::string token;
        while (row >> token) values.push_back(to_double(token));
    }
    return values;
}

std::vector<Vector> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read table file '" + path + "'");
    std::vector<Vector> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::vector<double> values;
        std::string token;
        while (row >> token) values.push_back(to_double(token));
        if (!values.empty()) rows.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    return rows;
}

std::vector<double> table_values(const std::vector<double>& inline_values, const std::string& file,
                                 const char* what) {
    if (!inline_values.empty() && !file.empty()) {
        throw ConfigError(std::string(what) + ": give either a table or a table_file, not both");
    }
    return file.empty() ? inline_values : read_values(file);
}

}  // namespace

bool is_config_key(const std::string& key) { return find_field(key) != nullptr; }

void set_config_value(InstanceConfig& config, const std::string& key, const std::string& value,
                      const fs::path& base) {
    const Field* field = find_field(key);
    if (!field) throw ConfigError("unknown key '" + key + "'");
    try {
        field->set(config, value, base);
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

InstanceConfig parse_config(const std::string& text, const fs::path& base) {
    InstanceConfig config;
    std::vector<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw ConfigError(where + "duplicate key '" + key + "'");
        }
        seen.push_back(key);
        try {
            set_config_value(config, key, value, base);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return config;
}

InstanceConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str(), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<std::pair<std::string, std::string>> echo_config(const InstanceConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Field& f : fields()) out.emplace_back(f.key, f.get(config));
    return out;
}

std::string echo_text(const InstanceConfig& config) {
    std::string out;
    for (const auto& [key, value] : echo_config(config)) out += key + " = " + value + "\n";
    return out;
}

ProblemInstance build_instance(const InstanceConfig& c) {
    if (c.dimension != 1 && c.dimension != 2) throw ConfigError("domain.dimension must be 1 or 2");
    if (c.extents.size() != static_cast<std::size_t>(c.dimension)) {
        throw ConfigError("domain.extents needs " + std::to_string(c.dimension) + " values");
    }
    if (c.cells.size() != static_cast<std::size_t>(c.dimension)) {
        throw ConfigError("domain.cells needs " + std::to_string(c.dimension) + " values");
    }
    if (!(c.period > 0.0)) throw ConfigError("time.period must be positive");
    if (c.steps < 2) throw ConfigError("time.steps must be at least 2");

    ProblemInstance p;
    p.mesh = std::make_shared<const SpatialDiscretization>(build_mesh(c.dimension, c.extents, c.cells));
    const auto elements = static_cast<std::size_t>(p.mesh->num_elements());

    if (c.m_kind == "constant") {
        p.m_elements.assign(elements, c.m_value);
    } else if (c.m_kind == "indicator") {
        if (!(c.m_lower < c.m_upper)) throw ConfigError("m.lower must be below m.upper");
        p.m_elements = sample_at_centroids(*p.mesh, [&](Point z) {
            return z.x > c.m_lower && z.x < c.m_upper ? c.m_inside : c.m_outside;
        });
    } else {
        p.m_elements = table_values(c.m_table, c.m_table_file, "m");
        if (p.m_elements.size() != elements) {
            throw ConfigError("m table has " + std::to_string(p.m_elements.size()) + " values, mesh has " +
                              std::to_string(elements) + " elements");
        }
    }

    if (c.a_kind == "constant") {
        p.diffusion = DiffusionCoefficient::constant(c.a_value, c.a_lower_bound < 0.0 ? c.a_value : c.a_lower_bound);
    } else if (c.a_kind == "separable") {
        const double derived =
            c.a_value * (1.0 - std::abs(c.a_time_amplitude)) * std::min(1.0, 1.0 + c.a_space_amplitude);
        p.diffusion = DiffusionCoefficient::separable(c.a_value, c.a_time_amplitude, c.a_space_amplitude, c.period,
                                                      c.extents, c.a_lower_bound < 0.0 ? derived : c.a_lower_bound);
    } else {
        ElementValues values = table_values(c.a_table, c.a_table_file, "a");
        if (values.size() != elements) {
            throw ConfigError("a table has " + std::to_string(values.size()) + " values, mesh has " +
                              std::to_string(elements) + " elements");
        }
        const double lowest = *std::min_element(values.begin(), values.end());
        p.diffusion = DiffusionCoefficient::table(std::move(values), c.a_lower_bound < 0.0 ? lowest : c.a_lower_bound);
    }

    p.g = ConvexTerm::from_name(c.g_kind, c.g_scale);
    p.convection = c.convection;

    if (c.forcing_kind == "fourier") {
        if (c.forcing_modes.empty()) throw ConfigError("forcing.kind = fourier needs forcing.modes");
        p.forcing = Forcing::fourier(c.forcing_modes, c.extents, c.period);
    } else if (c.forcing_kind == "table") {
        if (c.forcing_table_file.empty()) throw ConfigError("forcing.kind = table needs forcing.table_file");
        std::vector<Vector> rows = read_rows(c.forcing_table_file);
        if (!rows.empty() && rows.front().size() != p.mesh->num_dofs()) {
            throw ConfigError("forcing table rows have " + std::to_string(rows.front().size()) + " values, mesh has " +
                              std::to_string(p.mesh->num_dofs()) + " dofs");
        }
        p.forcing = Forcing::nodal_table(std::move(rows), c.period);
    }
    p.period = c.period;
    p.time_steps = c.steps;
    return p;
}

SolverConfig build_solver_config(const InstanceConfig& c) {
    SolverConfig s;
    s.period = c.period;
    s.time_steps = c.steps;
    if (c.schedule == "harmonic") {
        s.epsilons = SolverConfig::harmonic_schedule(c.stages);
    } else if (c.schedule == "list") {
        s.epsilons = c.epsilons;
    } else {
        s.epsilons = {1.0};
    }
    s.step.step_tolerance = c.step_tolerance;
    s.step.newton_tolerance = c.newton_tolerance;
    s.step.max_inner_iterations = c.max_inner;
    s.step.max_newton_iterations = c.max_newton;
    s.periodic_tolerance = c.periodic_tolerance;
    s.continuation_tolerance = c.continuation_tolerance;
    s.max_poincare_iterations = c.max_poincare;
    s.acceleration = c.acceleration == "plain"     ? Acceleration::plain
                     : c.acceleration == "relaxed" ? Acceleration::relaxed
                                                   : Acceleration::anderson;
    s.relaxation = c.relaxation;
    s.anderson_depth = c.anderson_depth;
    s.exponent = c.exponent;
    s.validate();
    return s;
}

bool has_fourier_oracle(const InstanceConfig& c) {
    return c.m_kind == "constant" && c.a_kind == "constant" && c.g_kind == "zero" && !c.convection &&
           (c.forcing_kind == "fourier" || c.forcing_kind == "zero");
}

}  // namespace perisolve::app
