// catchsim: command-line front end for the catching simulator.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "catching/errors.hpp"
#include "catching/scenario.hpp"

namespace fs = std::filesystem;
using namespace catching;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kSafetyStop = 2, kInfeasible = 3, kConfigError = 4 };

struct Common {
    std::string config_path;
    std::string out_dir;
};

ScenarioConfig resolve(const Common& common) {
    ScenarioConfig c = common.config_path.empty() ? ScenarioConfig{} : load_config(common.config_path);
    if (!common.out_dir.empty()) c.output_dir = common.out_dir;
    if (const char* env = std::getenv("CATCHSIM_OUTPUT_DIR"); env && *env) c.output_dir = env;
    return c;
}

fs::path prepare_dir(const ScenarioConfig& c) {
    fs::path dir(c.output_dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

std::string tag(const ScenarioConfig& c) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "_%s_%03.0fcm", to_string(c.sim.mode).c_str(), c.sim.drop_height * 100.0);
    return c.name + buf;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_print_config(const Common& common) {
    std::cout << print_config(resolve(common));
    return kOk;
}

int cmd_demo_gen(const Common& common) {
    const ScenarioConfig c = resolve(common);
    const fs::path dir = prepare_dir(c);
    const DemoSet demos = generate_synthetic_demos(c.demos, c.seed);
    const std::string stamp = "# config_hash=" + config_hash(c) + "\n";
    for (std::size_t i = 0; i < demos.trajectories.size(); ++i) {
        std::ostringstream traj, stiff;
        write_demo_csv(traj, demos.trajectories[i]);
        write_demo_csv(stiff, demos.stiffness[i]);
        write_file(dir / ("demo_trajectory_" + std::to_string(i) + ".csv"), stamp + traj.str());
        write_file(dir / ("demo_stiffness_" + std::to_string(i) + ".csv"), stamp + stiff.str());
    }
    std::cout << "wrote " << demos.trajectories.size() << " demonstration pairs to " << dir.string() << "\n";
    return kOk;
}

int cmd_learn(const Common& common) {
    const ScenarioConfig c = resolve(common);
    const fs::path dir = prepare_dir(c);
    const DemoSet demos = generate_synthetic_demos(c.demos, c.seed);
    const GmmModel gmm = fit_gmm(demos.trajectories, c.learning.gmm_components, c.seed);
    const std::string stamp = "# config_hash=" + config_hash(c) + "\n";
    std::ostringstream g;
    write_gmm(g, gmm);
    write_file(dir / "trajectory_gmm.txt", stamp + g.str());

    const PocModels models = learn_models(c);
    Demonstration ref;
    ref.inputs.resize(models.trajectory.size(), 1);
    ref.outputs.resize(models.trajectory.size(), models.trajectory.output_dim());
    for (int i = 0; i < models.trajectory.size(); ++i) {
        ref.inputs(i, 0) = models.trajectory.inputs[i];
        ref.outputs.row(i) = models.trajectory.means[i].transpose();
    }
    std::ostringstream r, p;
    write_demo_csv(r, ref);
    write_profile_csv(p, models.hvs);
    write_file(dir / "reference_mean.csv", stamp + r.str());
    write_file(dir / "hvs_profile.csv", stamp + p.str());
    std::cout << "wrote trajectory_gmm.txt, reference_mean.csv and hvs_profile.csv to " << dir.string() << "\n";
    return kOk;
}

int cmd_run(const Common& common, const std::string& mode, double drop, bool print_only) {
    ScenarioConfig c = resolve(common);
    if (!mode.empty()) c.sim.mode = parse_mode(mode);
    if (drop >= 0.0) c.sim.drop_height = drop;
    if (print_only) {
        std::cout << print_config(c);
        return kOk;
    }
    const fs::path dir = prepare_dir(c);
    const ExperimentResult r = run_experiment(c);

    std::ostringstream trace;
    write_trace_csv(trace, r.sim.trace, r.hash);
    write_file(dir / (tag(c) + "_trace.csv"), trace.str());

    std::ostringstream rep;
    rep << "# config_hash=" << r.hash << "\n";
    write_report_text(rep, r.metrics);
    rep << "stop=" << (r.sim.stop == StopReason::SafetyStop ? "safety-stop"
                       : r.sim.stop == StopReason::AtRest   ? "at-rest"
                                                            : "timeout")
        << "\n";
    rep << report_csv_header() << "\n" << report_csv_row(r.metrics) << "\n";
    write_file(dir / (tag(c) + "_report.txt"), rep.str());

    std::cout << to_string(c.sim.mode) << " drop=" << c.sim.drop_height << " " << report_csv_header() << "\n"
              << report_csv_row(r.metrics) << "\n";
    if (r.sim.stop == StopReason::SafetyStop) {
        std::cerr << "safety stop: " << r.sim.message << "\n";
        return kSafetyStop;
    }
    return kOk;
}

int cmd_compare(const Common& common, const std::string& modes, const std::string& heights) {
    const ScenarioConfig c = resolve(common);
    const fs::path dir = prepare_dir(c);
    std::vector<CompareEntry> entries;
    for (const auto& h : split(heights))
        for (const auto& m : split(modes)) entries.push_back({parse_mode(m), std::stod(h)});

    std::vector<ExperimentResult> results;
    const std::string table = compare_table(c, entries, &results);
    write_file(dir / (c.name + "_compare.csv"), "# config_hash=" + config_hash(c) + "\n" + table);
    bool stopped = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ScenarioConfig ci = c;
        ci.sim.mode = entries[i].mode;
        ci.sim.drop_height = entries[i].drop_height;
        std::ostringstream trace;
        write_trace_csv(trace, results[i].sim.trace, results[i].hash);
        write_file(dir / (tag(ci) + "_trace.csv"), trace.str());
        stopped = stopped || results[i].sim.stop == StopReason::SafetyStop;
    }
    std::cout << table;
    return stopped ? kSafetyStop : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Falling-object catching simulator"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config_path, "Scenario file (sectioned key = value)");
        sub->add_option("-o,--out", common.out_dir, "Output directory (CATCHSIM_OUTPUT_DIR overrides)");
    };

    auto* print = app.add_subcommand("print-config", "Print every resolved setting");
    add_common(print);
    auto* demo = app.add_subcommand("demo-gen", "Write synthetic demonstrations as CSV");
    add_common(demo);
    auto* learn = app.add_subcommand("learn", "Fit the trajectory GMM and the stiffness profile");
    add_common(learn);

    auto* run = app.add_subcommand("run", "Run one scenario and write its trace and metrics");
    add_common(run);
    std::string mode;
    double drop = -1.0;
    bool print_only = false;
    run->add_option("--mode", mode, "FP-IC, VM-IC or VM-VIC");
    run->add_option("--drop", drop, "Drop height [m]");
    run->add_flag("--print-config", print_only, "Print the resolved config and exit");

    auto* compare = app.add_subcommand("compare", "Run several modes/heights into one table");
    add_common(compare);
    std::string modes = "FP-IC,VM-IC,VM-VIC";
    std::string heights = "0.27";
    compare->add_option("--modes", modes, "Comma-separated modes");
    compare->add_option("--heights", heights, "Comma-separated drop heights [m]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*print) return cmd_print_config(common);
        if (*demo) return cmd_demo_gen(common);
        if (*learn) return cmd_learn(common);
        if (*run) return cmd_run(common, mode, drop, print_only);
        if (*compare) return cmd_compare(common, modes, heights);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const InfeasibleBox& e) {
        std::cerr << e.what() << "\n";
        return kInfeasible;
    } catch (const InvalidArgument& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
