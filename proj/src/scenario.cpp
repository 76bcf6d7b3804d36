#include "catching/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "catching/errors.hpp"

namespace catching {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
}

long long to_integer(const std::string& v) {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return i;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("expected true or false");
}

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const ScenarioConfig&)> get;
    std::function<void(ScenarioConfig&, const std::string&)> set;
};

template <typename Access>
Field real(const char* section, const char* key, Access access) {
    return {section, key,
            [access](const ScenarioConfig& c) { return fmt_double(access(const_cast<ScenarioConfig&>(c))); },
            [access](ScenarioConfig& c, const std::string& v) { access(c) = to_double(v); }};
}

template <typename Access>
Field integer(const char* section, const char* key, Access access) {
    return {section, key,
            [access](const ScenarioConfig& c) {
                return std::to_string(access(const_cast<ScenarioConfig&>(c)));
            },
            [access](ScenarioConfig& c, const std::string& v) {
                using T = std::decay_t<decltype(access(c))>;
                access(c) = static_cast<T>(to_integer(v));
            }};
}

template <typename Access>
Field boolean(const char* section, const char* key, Access access) {
    return {section, key,
            [access](const ScenarioConfig& c) {
                return std::string(access(const_cast<ScenarioConfig&>(c)) ? "true" : "false");
            },
            [access](ScenarioConfig& c, const std::string& v) { access(c) = to_bool(v); }};
}

template <typename Access>
Field text(const char* section, const char* key, Access access) {
    return {section, key, [access](const ScenarioConfig& c) { return access(const_cast<ScenarioConfig&>(c)); },
            [access](ScenarioConfig& c, const std::string& v) { access(c) = v; }};
}

/// A 6-vector setting whose translational (first three) or rotational part is one scalar.
template <typename Access>
Field block(const char* section, const char* key, Access access, int offset) {
    return {section, key,
            [access, offset](const ScenarioConfig& c) {
                return fmt_double(access(const_cast<ScenarioConfig&>(c))[offset]);
            },
            [access, offset](ScenarioConfig& c, const std::string& v) {
                access(c).segment(offset, 3).setConstant(to_double(v));
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(text("scenario", "name", [](ScenarioConfig& c) -> std::string& { return c.name; }));
        f.push_back({"scenario", "mode", [](const ScenarioConfig& c) { return to_string(c.sim.mode); },
                     [](ScenarioConfig& c, const std::string& v) { c.sim.mode = parse_mode(v); }});
        f.push_back(real("scenario", "drop_height", [](ScenarioConfig& c) -> double& { return c.sim.drop_height; }));
        f.push_back(integer("scenario", "seed", [](ScenarioConfig& c) -> std::uint64_t& { return c.seed; }));
        f.push_back(real("scenario", "duration", [](ScenarioConfig& c) -> double& { return c.sim.duration; }));
        f.push_back(real("scenario", "dt_sim", [](ScenarioConfig& c) -> double& { return c.sim.dt_sim; }));
        f.push_back(boolean("scenario", "release_object", [](ScenarioConfig& c) -> bool& { return c.sim.release_object; }));
        f.push_back(text("scenario", "output_dir", [](ScenarioConfig& c) -> std::string& { return c.output_dir; }));

        f.push_back(real("object", "mass", [](ScenarioConfig& c) -> double& { return c.sim.object_mass; }));
        f.push_back(real("object", "radius", [](ScenarioConfig& c) -> double& { return c.sim.object_radius; }));

        f.push_back(real("robot", "start_x", [](ScenarioConfig& c) -> double& { return c.sim.ee_start.x(); }));
        f.push_back(real("robot", "start_y", [](ScenarioConfig& c) -> double& { return c.sim.ee_start.y(); }));
        f.push_back(real("robot", "start_z", [](ScenarioConfig& c) -> double& { return c.sim.ee_start.z(); }));
        f.push_back({"robot", "inertia_translational",
                     [](const ScenarioConfig& c) { return fmt_double(c.sim.inertia.lambda(0, 0)); },
                     [](ScenarioConfig& c, const std::string& v) {
                         c.sim.inertia.lambda.topLeftCorner<3, 3>() = to_double(v) * Eigen::Matrix3d::Identity();
                     }});
        f.push_back({"robot", "inertia_rotational",
                     [](const ScenarioConfig& c) { return fmt_double(c.sim.inertia.lambda(3, 3)); },
                     [](ScenarioConfig& c, const std::string& v) {
                         c.sim.inertia.lambda.bottomRightCorner<3, 3>() = to_double(v) * Eigen::Matrix3d::Identity();
                     }});
        f.push_back(real("robot", "stiffness", [](ScenarioConfig& c) -> double& { return c.sim.stiffness; }));
        f.push_back(real("robot", "zeta", [](ScenarioConfig& c) -> double& { return c.sim.zeta; }));
        f.push_back(real("robot", "rot_stiffness", [](ScenarioConfig& c) -> double& { return c.sim.rot_stiffness; }));
        f.push_back(real("robot", "trigger_force", [](ScenarioConfig& c) -> double& { return c.sim.trigger_force; }));
        f.push_back(real("robot", "safety_force", [](ScenarioConfig& c) -> double& { return c.sim.safety_force; }));
        f.push_back(real("robot", "rest_speed", [](ScenarioConfig& c) -> double& { return c.sim.rest_speed; }));
        f.push_back(real("robot", "rest_time", [](ScenarioConfig& c) -> double& { return c.sim.rest_time; }));

        f.push_back(real("planner", "dt", [](ScenarioConfig& c) -> double& { return c.sim.planner.dt; }));
        f.push_back(real("planner", "gravity", [](ScenarioConfig& c) -> double& { return c.sim.planner.gravity; }));
        f.push_back(real("planner", "alpha", [](ScenarioConfig& c) -> double& { return c.sim.planner.weights.alpha; }));
        f.push_back(real("planner", "beta", [](ScenarioConfig& c) -> double& { return c.sim.planner.weights.beta; }));
        f.push_back(real("planner", "gamma", [](ScenarioConfig& c) -> double& { return c.sim.planner.weights.gamma; }));
        f.push_back(integer("planner", "horizon_cap", [](ScenarioConfig& c) -> int& { return c.sim.horizon_cap; }));
        auto vel = [](ScenarioConfig& c) -> Vector6d& { return c.sim.planner.limits.vel_max; };
        auto acc = [](ScenarioConfig& c) -> Vector6d& { return c.sim.planner.limits.acc_max; };
        f.push_back(block("planner", "vel_max_lin", vel, 0));
        f.push_back(block("planner", "vel_max_rot", vel, 3));
        f.push_back(block("planner", "acc_max_lin", acc, 0));
        f.push_back(block("planner", "acc_max_rot", acc, 3));
        f.push_back(real("planner", "workspace_min_x", [](ScenarioConfig& c) -> double& { return c.sim.planner.limits.pos_min[0]; }));
        f.push_back(real("planner", "workspace_min_y", [](ScenarioConfig& c) -> double& { return c.sim.planner.limits.pos_min[1]; }));
        f.push_back(real("planner", "workspace_min_z", [](ScenarioConfig& c) -> double& { return c.sim.planner.limits.pos_min[2]; }));
        f.push_back(real("planner", "workspace_max_x", [](ScenarioConfig& c) -> double& { return c.sim.planner.limits.pos_max[0]; }));
        f.push_back(real("planner", "workspace_max_y", [](ScenarioConfig& c) -> double& { return c.sim.planner.limits.pos_max[1]; }));
        f.push_back(real("planner", "workspace_max_z", [](ScenarioConfig& c) -> double& { return c.sim.planner.limits.pos_max[2]; }));

        f.push_back(real("contact", "penalty_stiffness", [](ScenarioConfig& c) -> double& { return c.sim.contact.penalty_stiffness; }));
        f.push_back(real("contact", "penalty_damping", [](ScenarioConfig& c) -> double& { return c.sim.contact.penalty_damping; }));
        f.push_back(real("contact", "restitution", [](ScenarioConfig& c) -> double& { return c.sim.contact.restitution_e; }));
        f.push_back(boolean("contact", "render_impulse", [](ScenarioConfig& c) -> bool& { return c.sim.contact.render_impulse; }));

        f.push_back(integer("demos", "count", [](ScenarioConfig& c) -> int& { return c.demos.count; }));
        f.push_back(integer("demos", "samples", [](ScenarioConfig& c) -> int& { return c.demos.samples; }));
        f.push_back(real("demos", "duration", [](ScenarioConfig& c) -> double& { return c.demos.duration; }));
        f.push_back(real("demos", "depth", [](ScenarioConfig& c) -> double& { return c.demos.depth; }));
        f.push_back(real("demos", "initial_velocity", [](ScenarioConfig& c) -> double& { return c.demos.initial_velocity; }));
        f.push_back(real("demos", "initial_acceleration", [](ScenarioConfig& c) -> double& { return c.demos.initial_acceleration; }));
        f.push_back(real("demos", "noise", [](ScenarioConfig& c) -> double& { return c.demos.noise; }));
        f.push_back(real("demos", "k_plateau", [](ScenarioConfig& c) -> double& { return c.demos.k_plateau; }));
        f.push_back(real("demos", "k_valley", [](ScenarioConfig& c) -> double& { return c.demos.k_valley; }));
        f.push_back(real("demos", "k_end", [](ScenarioConfig& c) -> double& { return c.demos.k_end; }));
        f.push_back(real("demos", "valley_phase", [](ScenarioConfig& c) -> double& { return c.demos.valley_phase; }));

        f.push_back(integer("learning", "gmm_components", [](ScenarioConfig& c) -> int& { return c.learning.gmm_components; }));
        f.push_back(integer("learning", "reference_points", [](ScenarioConfig& c) -> int& { return c.learning.reference_points; }));
        f.push_back(integer("learning", "hvs_components", [](ScenarioConfig& c) -> int& { return c.learning.hvs_components; }));
        f.push_back(integer("learning", "hvs_grid_points", [](ScenarioConfig& c) -> int& { return c.learning.hvs_grid_points; }));
        f.push_back(real("learning", "stiffness_cap", [](ScenarioConfig& c) -> double& { return c.learning.cap; }));
        f.push_back(real("learning", "kmp_lambda1", [](ScenarioConfig& c) -> double& { return c.sim.kmp.lambda1; }));
        f.push_back(real("learning", "kmp_lambda2", [](ScenarioConfig& c) -> double& { return c.sim.kmp.lambda2; }));
        f.push_back(real("learning", "kmp_bandwidth", [](ScenarioConfig& c) -> double& { return c.sim.kmp.bandwidth; }));
        f.push_back(real("learning", "via_variance", [](ScenarioConfig& c) -> double& { return c.sim.via_variance; }));
        f.push_back(text("learning", "trajectory_model", [](ScenarioConfig& c) -> std::string& { return c.learning.trajectory_model; }));
        f.push_back(text("learning", "hvs_profile", [](ScenarioConfig& c) -> std::string& { return c.learning.hvs_profile; }));
        return f;
    }();
    return table;
}

}  // namespace

ScenarioConfig parse_config(std::istream& is, const std::string& source, ScenarioConfig base) {
    std::string line;
    std::string section;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') fail("malformed section header");
            section = trim(body.substr(1, body.size() - 2));
            bool known = false;
            for (const auto& f : fields()) known = known || f.section == section;
            if (!known) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        if (section.empty()) fail("setting outside of a section");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const Field* field = nullptr;
        for (const auto& f : fields())
            if (f.section == section && f.key == key) field = &f;
        if (!field) fail("unknown key '" + key + "' in section [" + section + "]");
        try {
            field->set(base, value);
        } catch (const std::exception& e) {
            fail("invalid value '" + value + "' for " + key + " (" + e.what() + ")");
        }
    }
    try {
        base.sim.validate();
    } catch (const Error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return base;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

std::string print_config(const ScenarioConfig& config) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) os << "\n";
            section = f.section;
            os << "[" << section << "]\n";
        }
        os << f.key << " = " << f.get(config) << "\n";
    }
    return os.str();
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ScenarioConfig& config) {
    // where results are written does not change them
    ScenarioConfig c = config;
    c.output_dir.clear();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(print_config(c))));
    return buf;
}

PocModels learn_models(const ScenarioConfig& c) {
    const DemoSet demos = generate_synthetic_demos(c.demos, c.seed);
    PocModels models;

    GmmModel gmm;
    if (!c.learning.trajectory_model.empty()) {
        std::ifstream in(c.learning.trajectory_model);
        if (!in) throw ConfigError("cannot open trajectory model '" + c.learning.trajectory_model + "'");
        gmm = read_gmm(in);
    } else {
        gmm = fit_gmm(demos.trajectories, c.learning.gmm_components, c.seed);
    }
    std::vector<double> grid;
    const int n = std::max(2, c.learning.reference_points);
    for (int i = 0; i < n; ++i) grid.push_back(c.demos.duration * i / (n - 1));
    models.trajectory = build_reference(gmm, grid);

    if (!c.learning.hvs_profile.empty()) {
        std::ifstream in(c.learning.hvs_profile);
        if (!in) throw ConfigError("cannot open HVS profile '" + c.learning.hvs_profile + "'");
        models.hvs = read_profile_csv(in);
    } else {
        HvsLearnOptions o;
        o.components = c.learning.hvs_components;
        o.grid_points = c.learning.hvs_grid_points;
        o.cap = c.learning.cap;
        o.seed = c.seed;
        models.hvs = learn_hvs(demos.stiffness, o);
    }
    return models;
}

ExperimentResult run_experiment(const ScenarioConfig& config, const PocModels* models) {
    PocModels learned;
    if (models == nullptr && config.sim.mode != ControlMode::FixedPosition) {
        learned = learn_models(config);
        models = &learned;
    }
    ExperimentResult r;
    r.hash = config_hash(config);
    r.sim = run_scenario(config.sim, models);
    MetricsOptions o;
    o.trigger_force = config.sim.trigger_force;
    o.object_weight_force = -config.sim.object_mass * config.sim.planner.gravity;
    r.metrics = compute_report(r.sim.trace, o);
    return r;
}

std::string compare_table(const ScenarioConfig& config, const std::vector<CompareEntry>& entries,
                          std::vector<ExperimentResult>* results) {
    const PocModels models = learn_models(config);
    std::ostringstream os;
    os << "mode,drop_height," << report_csv_header() << ",status,config_hash\n";
    for (const auto& e : entries) {
        ScenarioConfig c = config;
        c.sim.mode = e.mode;
        c.sim.drop_height = e.drop_height;
        ExperimentResult r = run_experiment(c, &models);
        const char* status = r.sim.stop == StopReason::SafetyStop ? "safety-stop"
                             : r.sim.stop == StopReason::AtRest   ? "at-rest"
                                                                  : "timeout";
        os << to_string(e.mode) << "," << fmt_double(e.drop_height) << "," << report_csv_row(r.metrics) << ","
           << status << "," << r.hash << "\n";
        if (results) results->push_back(std::move(r));
    }
    return os.str();
}

}  // namespace catching
