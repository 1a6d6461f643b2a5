#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bicsim/csv_io.hpp"
#include "bicsim/errors.hpp"
#include "bicsim/metrics.hpp"
#include "bicsim/scenario.hpp"
#include "bicsim/sim_engine.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitBoundViolation = 3;

std::pair<double, double> parse_window(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw bicsim::ValidationError("window must be given as t0:t1");
    return {std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))};
}

int run_command(const std::string& scenario_path, const std::string& out_dir) {
    bicsim::Scenario scenario = bicsim::load_scenario(scenario_path);
    bicsim::SimEngine engine(std::move(scenario));
    std::cout << "scenario '" << engine.scenario().name << "': " << engine.scenario().n_buses
              << " buses, " << engine.scenario().n_generators() << " generators, t_end "
              << engine.scenario().t_end << " s, dt " << engine.scenario().dt << " s\n";

    const auto records = engine.run();
    std::filesystem::create_directories(out_dir);
    const std::string csv_path = (std::filesystem::path(out_dir) / "trajectory.csv").string();
    bicsim::export_csv(records, csv_path);
    std::cout << records.size() << " records written to " << csv_path << "\n";

    // Health summary over the trailing 10% of the run.
    const double t_end = records.back().time;
    const auto report = bicsim::compute_metrics(records, engine.scenario().controller,
                                                0.9 * t_end, t_end);
    std::cout << bicsim::format_report(report);
    return report.bound_violations == 0 ? kExitOk : kExitBoundViolation;
}

int metrics_command(const std::string& csv_path, const std::string& scenario_path,
                    const std::string& window_spec) {
    const auto [w0, w1] = parse_window(window_spec);
    bicsim::Scenario scenario = bicsim::load_scenario(scenario_path);
    // Nominal inputs come from the same equilibrium the run used.
    bicsim::SimEngine engine(std::move(scenario));
    const auto records = bicsim::import_csv(csv_path);
    const auto report = bicsim::compute_metrics(records, engine.scenario().controller, w0, w1);
    std::cout << bicsim::format_report(report);
    return report.bound_violations == 0 ? kExitOk : kExitBoundViolation;
}

int validate_command(const std::string& scenario_path) {
    const bicsim::Scenario scenario = bicsim::load_scenario(scenario_path);
    std::cout << bicsim::scenario_to_json(scenario).dump(2) << "\n";
    std::cerr << "scenario OK: " << scenario.n_buses << " buses, " << scenario.n_generators()
              << " generators, " << scenario.events.size() << " events\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multimachine power system simulator with distributed bounded-integral control"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", csv_path, window_spec;

    CLI::App* run = app.add_subcommand("run", "run a scenario and export the trajectory CSV");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory (default: out)");

    CLI::App* metrics = app.add_subcommand("metrics", "compute the metrics report from a CSV");
    metrics->add_option("csv", csv_path, "trajectory CSV produced by run")->required();
    metrics->add_option("--scenario", scenario_path, "scenario the CSV was produced from")
        ->required();
    metrics->add_option("--window", window_spec, "averaging window t0:t1 in seconds")->required();

    CLI::App* validate = app.add_subcommand("validate", "validate a scenario and echo defaults");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(scenario_path, out_dir);
        if (metrics->parsed()) return metrics_command(csv_path, scenario_path, window_spec);
        if (validate->parsed()) return validate_command(scenario_path);
    } catch (const bicsim::BoundViolationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBoundViolation;
    } catch (const bicsim::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const bicsim::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
