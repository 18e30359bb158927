// leakloc: command-line front end for model inspection, simulation, leak
// localization and experiment sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "leakloc/error.hpp"
#include "leakloc/generators.hpp"
#include "leakloc/harness.hpp"
#include "leakloc/inp.hpp"
#include "leakloc/leak_sim.hpp"
#include "leakloc/localization.hpp"
#include "leakloc/parallel.hpp"
#include "leakloc/text.hpp"

namespace {

using namespace leakloc;
using json = nlohmann::json;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string output;
    std::string format;  // "", "csv" or "json"
    unsigned workers = 0;
};

void emit(const GlobalOptions& g, const std::string& text) {
    if (g.output.empty())
        std::cout << text;
    else
        write_file(g.output, text);
}

std::vector<NodeId> resolve_labels(const std::vector<std::string>& labels, const HydraulicModel& model) {
    std::vector<NodeId> ids;
    for (const auto& label : labels) ids.push_back(model.id(label));
    return ids;
}

unsigned workers(const GlobalOptions& g) { return g.workers > 0 ? g.workers : default_workers(); }

// -- parse -------------------------------------------------------------------

struct ParseCommand {
    std::string model;

    void run(const GlobalOptions& g) const {
        const auto m = load_inp(model);
        const auto& t = m.times();
        if (g.format == "json") {
            json doc = {{"nodes", m.node_count()},     {"junctions", m.junction_count()},
                        {"reservoirs", m.reservoir_count()}, {"pipes", m.pipes().size()},
                        {"steps", t.steps},            {"step_seconds", t.step_seconds}};
            emit(g, doc.dump(2) + "\n");
        } else if (g.format == "csv") {
            emit(g, "nodes,junctions,reservoirs,pipes,steps,step_seconds\n" + std::to_string(m.node_count()) + "," +
                        std::to_string(m.junction_count()) + "," + std::to_string(m.reservoir_count()) + "," +
                        std::to_string(m.pipes().size()) + "," + std::to_string(t.steps) + "," +
                        format_double(t.step_seconds) + "\n");
        } else {
            emit(g, "M=" + std::to_string(m.node_count()) + " nodes, " + std::to_string(m.pipes().size()) +
                        " pipes, T=" + std::to_string(t.steps) + "\n");
        }
    }
};

// -- simulate ----------------------------------------------------------------

struct SimulateCommand {
    std::string model;
    std::string leak_node;
    double leak_size = 6.38;
    double noise = 0.0;
    double sigma_fraction = 0.5;
    std::vector<std::string> sensors;

    void run(const GlobalOptions& g) const {
        const auto m = load_inp(model);
        HydraulicSolver solver(m);
        const auto demands = demand_matrix(m);
        const auto heads = head_schedule(m);
        PressureMatrix pressures;
        if (!leak_node.empty()) {
            const NodeId leak = m.id(leak_node);
            // Same per-scenario seed as `sweep`, so the file replays that scenario.
            GroundTruth truth{leak, leak_size, NoiseSpec{noise, measurement_seed(g.seed.value_or(0), leak), sigma_fraction}};
            pressures = noised_measurement(solver, demands, heads, truth);
        } else {
            if (noise != 0.0) throw Error("--noise needs --leak-node");
            pressures = solver.simulate(demands, heads);
        }
        if (!sensors.empty()) pressures = restrict(pressures, resolve_labels(sensors, m));
        emit(g, g.format == "json" ? pressures_json(pressures, m) : pressures_csv(pressures, m));
    }
};

// -- localize ----------------------------------------------------------------

struct LocalizeCommand {
    std::string model;
    std::string measurements;
    std::vector<std::string> sensors;
    std::string mobile;
    std::vector<std::string> allowed;
    double leak_size = 6.38;
    std::size_t iterations = 1;
    std::size_t top = 10;

    void run(const GlobalOptions& g) const {
        const auto m = load_inp(model);
        const auto recorded = parse_pressures_csv(read_file(measurements), m);
        MeasurementSource source(recorded);

        std::vector<NodeId> stationary = resolve_labels(sensors, m);
        if (stationary.empty()) throw Error("--sensors needs at least one node");
        NodeId moving = stationary.back();
        if (!mobile.empty()) {
            moving = m.id(mobile);
            std::erase(stationary, moving);
        } else {
            stationary.pop_back();
        }
        std::vector<NodeId> allowed_ids;
        if (allowed.empty() || (allowed.size() == 1 && to_upper(allowed[0]) == "ALL")) {
            for (NodeId j : m.junction_ids())
                if (source.covers(j)) allowed_ids.push_back(j);
        } else {
            allowed_ids = resolve_labels(allowed, m);
        }
        for (NodeId s : stationary) allowed_ids.push_back(s);
        allowed_ids.push_back(moving);
        SensorConfig config(stationary, moving, canonical(allowed_ids));

        auto result = iterative_localize(m, source, config, demand_matrix(m), head_schedule(m), leak_size, iterations,
                                         SolverSettings{}, workers(g));
        const auto& final_ranking = result.iterations.back().ranking.entries();
        const std::size_t k = std::min(top, final_ranking.size());

        if (g.format == "json") {
            json rows = json::array();
            for (std::size_t i = 0; i < k; ++i)
                rows.push_back({{"rank", i + 1},
                                {"node", m.label(final_ranking[i].node)},
                                {"rmse_m", final_ranking[i].rmse}});
            emit(g, rows.dump(2) + "\n");
        } else if (g.format == "csv") {
            std::string out = "rank,node,rmse_m\n";
            for (std::size_t i = 0; i < k; ++i)
                out += std::to_string(i + 1) + "," + m.label(final_ranking[i].node) + "," +
                       format_double(final_ranking[i].rmse) + "\n";
            emit(g, out);
        } else {
            std::string out = "m_hat=" + m.label(result.final_node) + "\n";
            for (std::size_t i = 0; i < result.iterations.size(); ++i) {
                const auto& it = result.iterations[i];
                out += "iteration " + std::to_string(i) + ": m_s=" + m.label(it.selected) + " sensors=";
                auto ids = it.sensors.sensors();
                for (std::size_t s = 0; s < ids.size(); ++s) out += (s ? "," : "") + m.label(ids[s]);
                if (i > 0 && !it.shifted) out += " (no-shift)";
                out += "\n";
            }
            out += "top " + std::to_string(k) + ":\n";
            for (std::size_t i = 0; i < k; ++i)
                out += "  " + std::to_string(i + 1) + ". " + m.label(final_ranking[i].node) +
                       "  rmse=" + format_double(final_ranking[i].rmse) + "\n";
            emit(g, out);
        }
    }
};

// -- sweep / replay ----------------------------------------------------------

struct SweepCommand {
    std::string config_path;
    std::string measurements;  // replay only

    void run(const GlobalOptions& g, bool replay) const {
        auto config = load_config(config_path);
        if (g.seed) config.seed = *g.seed;
        if (!g.output.empty()) config.output = g.output;
        if (config.output.empty()) throw Error("no output directory: set 'output' in the config or pass --output");
        const auto model = load_inp(config.model_path);
        const OutputFormat format = g.format == "json" ? OutputFormat::json : OutputFormat::csv;
        SweepResult result = replay ? run_replay(config, model, parse_pressures_csv(read_file(measurements), model),
                                                 workers(g))
                                    : run_sweep(config, model, workers(g));
        write_outputs(config.output, config, model, result, format);
        std::cerr << result.runs.size() << " runs (" << result.excluded << " excluded) written to " << config.output
                  << "\n";
    }
};

// -- gen-model ---------------------------------------------------------------

struct GenerateCommand {
    std::string kind = "grid";
    GridOptions grid;
    RandomNetworkOptions random;

    void run(const GlobalOptions& g) {
        HydraulicModel model;
        if (kind == "grid") {
            if (g.seed) grid.seed = *g.seed;
            model = make_grid(grid);
        } else {
            if (g.seed) random.seed = *g.seed;
            model = make_random_network(random);
        }
        emit(g, write_inp(model));
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Water network leak localization toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions global;
    app.add_option("--seed", global.seed, "Master seed for every random draw");
    app.add_option("--output,-o", global.output, "Output file (output directory for sweep/replay)");
    app.add_option("--format", global.format, "Output encoding")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--workers", global.workers, "Worker threads (default: LEAKLOC_WORKERS or all cores)");

    ParseCommand parse;
    auto* parse_cmd = app.add_subcommand("parse", "Validate an INP file and print a model summary");
    parse_cmd->add_option("model", parse.model, "INP file")->required();

    SimulateCommand simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate pressures, optionally with a noised leak");
    sim_cmd->add_option("model", simulate.model, "INP file")->required();
    sim_cmd->add_option("--leak-node", simulate.leak_node, "Junction carrying the leak");
    sim_cmd->add_option("--leak-size", simulate.leak_size, "Leak flow in m3/h")->capture_default_str();
    sim_cmd->add_option("--noise", simulate.noise, "Noise bound l (0 disables noise)")->capture_default_str();
    sim_cmd->add_option("--sigma-fraction", simulate.sigma_fraction, "Noise sigma as a fraction of l")
        ->capture_default_str();
    sim_cmd->add_option("--sensors", simulate.sensors, "Only write these nodes")->delimiter(',');

    LocalizeCommand localize;
    auto* loc_cmd = app.add_subcommand("localize", "Localize a leak from recorded pressures");
    loc_cmd->add_option("model", localize.model, "INP file")->required();
    loc_cmd->add_option("--measurements,-m", localize.measurements, "Pressure CSV")->required();
    loc_cmd->add_option("--sensors", localize.sensors, "Sensor nodes; the last is mobile unless --mobile is given")
        ->required()
        ->delimiter(',');
    loc_cmd->add_option("--mobile", localize.mobile, "Mobile sensor node");
    loc_cmd->add_option("--allowed", localize.allowed, "Allowed placements (default: every recorded junction)")
        ->delimiter(',');
    loc_cmd->add_option("--leak-size", localize.leak_size, "Estimated leak flow in m3/h")->capture_default_str();
    loc_cmd->add_option("--iterations", localize.iterations, "Localization passes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    loc_cmd->add_option("--top", localize.top, "Ranking entries to print")->capture_default_str();

    SweepCommand sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a synthetic leak sweep");
    sweep_cmd->add_option("config", sweep.config_path, "Experiment config file")->required();

    SweepCommand replay;
    auto* replay_cmd = app.add_subcommand("replay", "Run the sweep protocol on recorded pressures");
    replay_cmd->add_option("config", replay.config_path, "Experiment config file")->required();
    replay_cmd->add_option("--measurements,-m", replay.measurements, "Pressure CSV")->required();

    GenerateCommand generate;
    auto* gen_cmd = app.add_subcommand("gen-model", "Write a synthetic network as INP");
    gen_cmd->add_option("kind", generate.kind, "grid or random")
        ->capture_default_str()
        ->check(CLI::IsMember({"grid", "random"}));
    gen_cmd->add_option("--rows", generate.grid.rows)->capture_default_str();
    gen_cmd->add_option("--cols", generate.grid.cols)->capture_default_str();
    gen_cmd->add_option("--spacing", generate.grid.spacing, "Grid pipe length (m)")->capture_default_str();
    gen_cmd->add_option("--demand", generate.grid.base_demand, "Mean junction demand (m3/h)")->capture_default_str();
    gen_cmd->add_option("--diameter", generate.grid.diameter_mm, "Grid pipe diameter (mm)")->capture_default_str();
    gen_cmd->add_option("--head", generate.grid.reservoir_head, "Reservoir head (m)")->capture_default_str();
    gen_cmd->add_option("--feeds", generate.grid.feeds, "Grid corners fed by a reservoir (1-4)")->capture_default_str();
    gen_cmd->add_option("--ring-diameter", generate.grid.perimeter_diameter_mm,
                        "Diameter of the grid's outer ring (mm, 0: same as --diameter)")
        ->capture_default_str();
    gen_cmd->add_option("--steps", generate.grid.steps, "Time steps")->capture_default_str();
    gen_cmd->add_option("--junctions", generate.random.junctions, "Random network size")->capture_default_str();
    gen_cmd->add_option("--chords", generate.random.chords, "Loop-closing pipes")->capture_default_str();
    gen_cmd->add_option("--reservoirs", generate.random.reservoirs)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        if (app.get_subcommands().empty()) std::cerr << app.help();
        return 1;
    }

    try {
        if (*parse_cmd) parse.run(global);
        else if (*sim_cmd) simulate.run(global);
        else if (*loc_cmd) localize.run(global);
        else if (*sweep_cmd) sweep.run(global, false);
        else if (*replay_cmd) replay.run(global, true);
        else if (*gen_cmd) {
            generate.random.steps = generate.grid.steps;
            generate.run(global);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
