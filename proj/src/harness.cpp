#include "leakloc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "leakloc/error.hpp"
#include "leakloc/localization.hpp"
#include "leakloc/parallel.hpp"
#include "leakloc/text.hpp"

namespace leakloc {

namespace {

using json = nlohmann::json;

std::uint64_t parse_unsigned(std::string_view text, std::size_t line, std::string_view key) {
    std::uint64_t value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size())
        throw ParseError("'" + std::string(key) + "' needs a non-negative integer, got '" + std::string(text) + "'",
                         line);
    return value;
}

std::vector<std::string> parse_list(std::string_view text) {
    if (to_upper(trim(text)) == "ALL") return {};
    std::vector<std::string> out;
    for (const auto& item : split(text, ',')) {
        auto label = trim(item);
        if (!label.empty()) out.emplace_back(label);
    }
    return out;
}

std::vector<NodeId> resolve_junctions(const std::vector<std::string>& labels, const HydraulicModel& model,
                                      std::string_view what) {
    if (labels.empty()) return model.junction_ids();
    std::vector<NodeId> ids;
    for (const auto& label : labels) {
        NodeId id = model.id(label);
        if (!model.is_junction(id)) throw Error(std::string(what) + " node '" + label + "' is not a junction");
        ids.push_back(id);
    }
    auto sorted = canonical(ids);
    if (sorted.size() != ids.size()) throw Error(std::string(what) + " list repeats a node");
    return sorted;
}

std::string join_labels(const std::vector<NodeId>& nodes, const HydraulicModel& model, char separator) {
    std::string out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) out += separator;
        out += model.label(nodes[i]);
    }
    return out;
}

json labels_array(const std::vector<NodeId>& nodes, const HydraulicModel& model) {
    json out = json::array();
    for (NodeId n : nodes) out.push_back(model.label(n));
    return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Scenario {
    std::vector<NodeId> allowed;
    std::vector<NodeId> leaks;
};

Scenario resolve(const ExperimentConfig& config, const HydraulicModel& model) {
    config.validate();
    Scenario s{resolve_junctions(config.allowed, model, "allowed"),
               resolve_junctions(config.leak_nodes, model, "leak")};
    if (s.allowed.empty()) throw Error("no allowed sensor locations");
    if (s.leaks.empty()) throw Error("no leak nodes");
    if (config.n_sensors > s.allowed.size())
        throw Error("n_sensors (" + std::to_string(config.n_sensors) + ") exceeds the " +
                    std::to_string(s.allowed.size()) + " allowed locations");
    return s;
}

// Runs every (leak, repetition) pair against prepared measurement sources.
// `sources[i]` belongs to `scenario.leaks[i]`; a missing source excludes
// all of that leak's runs with `source_errors[i]`.
SweepResult execute(const ExperimentConfig& config, const HydraulicModel& model, const Scenario& scenario,
                    const SensitivityBank& bank, const DistanceOracle& oracle,
                    const std::vector<std::optional<MeasurementSource>>& sources,
                    const std::vector<std::string>& source_errors, unsigned workers) {
    const std::size_t reps = config.repetitions;
    SweepResult result;
    result.runs.resize(scenario.leaks.size() * reps);
    parallel_for(result.runs.size(), workers, [&](std::size_t k) {
        const std::size_t leak_index = k / reps;
        RunRecord& rec = result.runs[k];
        rec.leak_node = scenario.leaks[leak_index];
        rec.repetition = k % reps;
        if (!sources[leak_index]) {
            rec.excluded = true;
            rec.error = source_errors[leak_index];
            return;
        }
        try {
            auto drawn = draw_sensors(scenario.allowed, config.n_sensors,
                                      run_seed(config.seed, rec.leak_node, rec.repetition));
            const NodeId mobile = drawn.back();
            drawn.pop_back();
            SensorConfig sensors(std::move(drawn), mobile, scenario.allowed);
            auto localized = iterative_localize(model, bank, *sources[leak_index], sensors, config.iterations, oracle);
            auto metrics = evaluate(localized, rec.leak_node, oracle);
            for (std::size_t i = 0; i < localized.iterations.size(); ++i) {
                const auto& it = localized.iterations[i];
                rec.iterations.push_back(RunIteration{it.sensors.sensors(), it.selected, metrics[i], it.ranking.head().rmse});
            }
        } catch (const Error& e) {
            rec.excluded = true;
            rec.error = e.what();
            rec.iterations.clear();
        }
    });

    std::string first_error;
    for (const auto& rec : result.runs)
        if (rec.excluded) {
            if (result.excluded++ == 0) first_error = rec.error;
        }
    if (result.excluded * 10 > result.runs.size())
        throw Error(std::to_string(result.excluded) + " of " + std::to_string(result.runs.size()) +
                    " runs failed; first failure: " + first_error);
    result.aggregates = aggregate(result.runs, config.n_sensors, config.iterations);
    return result;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n_sensors < 1) throw Error("n_sensors must be at least 1");
    if (repetitions < 1) throw Error("repetitions must be at least 1");
    if (iterations < 1) throw Error("iterations must be at least 1");
    if (!(leak_size > 0.0) || !std::isfinite(leak_size)) throw Error("leak_size must be positive");
    if (!(candidate_leak_size() > 0.0) || !std::isfinite(candidate_leak_size()))
        throw Error("estimated_leak_size must be positive");
    NoiseSpec{noise_bound, seed, noise_sigma_fraction}.validate();
    solver.validate();
}

ExperimentConfig parse_config(std::string_view text, const std::string& base_dir) {
    ExperimentConfig config;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw ParseError("key '" + key + "' given twice", line_no);

        if (key == "model") {
            config.model_path = std::string(value);
        } else if (key == "allowed") {
            config.allowed = parse_list(value);
        } else if (key == "n_sensors") {
            config.n_sensors = parse_unsigned(value, line_no, key);
        } else if (key == "leak_size") {
            config.leak_size = parse_double(value, line_no, key);
        } else if (key == "estimated_leak_size") {
            config.estimated_leak_size = parse_double(value, line_no, key);
        } else if (key == "noise_bound") {
            config.noise_bound = parse_double(value, line_no, key);
        } else if (key == "noise_sigma_fraction") {
            config.noise_sigma_fraction = parse_double(value, line_no, key);
        } else if (key == "seed") {
            config.seed = parse_unsigned(value, line_no, key);
        } else if (key == "repetitions") {
            config.repetitions = parse_unsigned(value, line_no, key);
        } else if (key == "iterations") {
            config.iterations = parse_unsigned(value, line_no, key);
        } else if (key == "leak_nodes") {
            config.leak_nodes = parse_list(value);
        } else if (key == "output") {
            config.output = std::string(value);
        } else if (key == "max_iterations") {
            config.solver.max_iterations = parse_unsigned(value, line_no, key);
        } else if (key == "flow_tolerance") {
            config.solver.flow_tolerance = parse_double(value, line_no, key);
        } else {
            throw ParseError("unknown key '" + key + "'", line_no);
        }
    }
    if (!base_dir.empty()) {
        namespace fs = std::filesystem;
        if (!config.model_path.empty() && fs::path(config.model_path).is_relative())
            config.model_path = (fs::path(base_dir) / config.model_path).lexically_normal().string();
        if (!config.output.empty() && fs::path(config.output).is_relative())
            config.output = (fs::path(base_dir) / config.output).lexically_normal().string();
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_file(path), std::filesystem::path(path).parent_path().string());
}

std::uint64_t run_seed(std::uint64_t master, NodeId leak_node, std::size_t repetition) {
    return derive_seed(master, "run", leak_node.index, repetition);
}

std::uint64_t measurement_seed(std::uint64_t master, NodeId leak_node) {
    return derive_seed(master, "measurement", leak_node.index);
}

std::vector<NodeId> draw_sensors(std::span<const NodeId> allowed, std::size_t count, std::uint64_t seed) {
    if (count > allowed.size()) throw Error("cannot draw more sensors than allowed locations");
    std::vector<NodeId> pool(allowed.begin(), allowed.end());
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

SweepResult run_sweep(const ExperimentConfig& config, const HydraulicModel& model, unsigned workers) {
    const Scenario scenario = resolve(config, model);
    HydraulicSolver solver(model, config.solver);
    const DemandMatrix demands = demand_matrix(model);
    const HeadSchedule heads = head_schedule(model);
    const DistanceOracle oracle(model);
    const auto bank =
        SensitivityBank::build(solver, demands, heads, config.candidate_leak_size(), scenario.allowed, workers);

    std::vector<std::optional<MeasurementSource>> sources(scenario.leaks.size());
    std::vector<std::string> errors(scenario.leaks.size());
    parallel_for(scenario.leaks.size(), workers, [&](std::size_t i) {
        const NodeId leak = scenario.leaks[i];
        GroundTruth truth{leak, config.leak_size,
                          NoiseSpec{config.noise_bound, measurement_seed(config.seed, leak), config.noise_sigma_fraction}};
        try {
            sources[i] = MeasurementSource(restrict(noised_measurement(solver, demands, heads, truth), scenario.allowed));
        } catch (const SolverError& e) {
            errors[i] = e.what();
        }
    });
    return execute(config, model, scenario, bank, oracle, sources, errors, workers);
}

SweepResult run_replay(const ExperimentConfig& config, const HydraulicModel& model, const PressureMatrix& recorded,
                       unsigned workers) {
    const Scenario scenario = resolve(config, model);
    if (scenario.leaks.size() != 1) throw Error("replay needs exactly one true leak node in 'leak_nodes'");
    if (recorded.steps() != model.steps())
        throw Error("recording has " + std::to_string(recorded.steps()) + " steps, the model has " +
                    std::to_string(model.steps()));
    MeasurementSource full(recorded);
    full.require(scenario.allowed, model);

    HydraulicSolver solver(model, config.solver);
    const DistanceOracle oracle(model);
    const auto bank = SensitivityBank::build(solver, demand_matrix(model), head_schedule(model),
                                             config.candidate_leak_size(), scenario.allowed, workers);
    std::vector<std::optional<MeasurementSource>> sources{MeasurementSource(restrict(recorded, scenario.allowed))};
    return execute(config, model, scenario, bank, oracle, sources, {std::string{}}, workers);
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs, std::size_t n_sensors,
                                    std::size_t iterations) {
    std::vector<AggregateRow> rows;
    for (std::size_t it = 0; it < iterations; ++it) {
        AggregateRow row;
        row.n_sensors = n_sensors;
        row.iteration = it;
        std::vector<const IterationMetrics*> samples;
        for (const auto& run : runs) {
            if (run.excluded || it >= run.iterations.size()) {
                ++row.excluded;
                continue;
            }
            samples.push_back(&run.iterations[it].metrics);
        }
        row.count = samples.size();
        auto stats = [&](auto field, double& mean, double& sd) {
            if (samples.empty()) {
                mean = sd = std::nan("");
                return;
            }
            double sum = 0.0;
            for (const auto* m : samples) sum += field(*m);
            mean = sum / static_cast<double>(samples.size());
            double sq = 0.0;
            for (const auto* m : samples) sq += (field(*m) - mean) * (field(*m) - mean);
            sd = std::sqrt(sq / static_cast<double>(samples.size()));
        };
        stats([](const IterationMetrics& m) { return m.d_leak; }, row.mean_d_leak, row.std_d_leak);
        stats([](const IterationMetrics& m) { return m.d_sensor; }, row.mean_d_sensor, row.std_d_sensor);
        stats([](const IterationMetrics& m) { return static_cast<double>(m.rank); }, row.mean_rank, row.std_rank);
        rows.push_back(row);
    }
    return rows;
}

std::string runs_csv(const SweepResult& result, const HydraulicModel& model, std::size_t n_sensors,
                     std::size_t iterations) {
    std::ostringstream out;
    out << "leak_node,repetition,iteration,n_sensors,sensor_list,m_s,d_leak_m,d_sensor_m,rank,rmse_best,excluded_flag\n";
    for (const auto& run : result.runs)
        for (std::size_t it = 0; it < iterations; ++it) {
            out << model.label(run.leak_node) << ',' << run.repetition << ',' << it << ',' << n_sensors << ',';
            if (run.excluded) {
                out << ",,,,,,1\n";
                continue;
            }
            const auto& r = run.iterations[it];
            out << join_labels(r.sensors, model, ';') << ',' << model.label(r.selected) << ','
                << format_double(r.metrics.d_leak) << ',' << format_double(r.metrics.d_sensor) << ','
                << r.metrics.rank << ',' << format_double(r.rmse_best) << ",0\n";
        }
    return out.str();
}

std::string aggregates_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "n_sensors,iteration,count,excluded,mean_d_leak_m,std_d_leak_m,mean_d_sensor_m,std_d_sensor_m,mean_rank,"
           "std_rank\n";
    for (const auto& a : result.aggregates)
        out << a.n_sensors << ',' << a.iteration << ',' << a.count << ',' << a.excluded << ','
            << format_double(a.mean_d_leak) << ',' << format_double(a.std_d_leak) << ','
            << format_double(a.mean_d_sensor) << ',' << format_double(a.std_d_sensor) << ','
            << format_double(a.mean_rank) << ',' << format_double(a.std_rank) << '\n';
    return out.str();
}

std::string runs_json(const SweepResult& result, const HydraulicModel& model, std::size_t n_sensors,
                      std::size_t iterations) {
    json rows = json::array();
    for (const auto& run : result.runs)
        for (std::size_t it = 0; it < iterations; ++it) {
            json row = {{"leak_node", model.label(run.leak_node)},
                        {"repetition", run.repetition},
                        {"iteration", it},
                        {"n_sensors", n_sensors},
                        {"excluded_flag", run.excluded ? 1 : 0}};
            if (run.excluded) {
                row["sensor_list"] = json::array();
                for (const char* key : {"m_s", "d_leak_m", "d_sensor_m", "rank", "rmse_best"}) row[key] = nullptr;
            } else {
                const auto& r = run.iterations[it];
                row["sensor_list"] = labels_array(r.sensors, model);
                row["m_s"] = model.label(r.selected);
                row["d_leak_m"] = number_or_null(r.metrics.d_leak);
                row["d_sensor_m"] = number_or_null(r.metrics.d_sensor);
                row["rank"] = r.metrics.rank;
                row["rmse_best"] = number_or_null(r.rmse_best);
            }
            rows.push_back(std::move(row));
        }
    return rows.dump(2) + "\n";
}

std::string aggregates_json(const SweepResult& result) {
    json rows = json::array();
    for (const auto& a : result.aggregates)
        rows.push_back({{"n_sensors", a.n_sensors},
                        {"iteration", a.iteration},
                        {"count", a.count},
                        {"excluded", a.excluded},
                        {"mean_d_leak_m", number_or_null(a.mean_d_leak)},
                        {"std_d_leak_m", number_or_null(a.std_d_leak)},
                        {"mean_d_sensor_m", number_or_null(a.mean_d_sensor)},
                        {"std_d_sensor_m", number_or_null(a.std_d_sensor)},
                        {"mean_rank", number_or_null(a.mean_rank)},
                        {"std_rank", number_or_null(a.std_rank)}});
    return rows.dump(2) + "\n";
}

std::string config_json(const ExperimentConfig& config, const HydraulicModel& model) {
    const Scenario s = resolve(config, model);
    json doc = {{"model", config.model_path},
                {"allowed", labels_array(s.allowed, model)},
                {"n_sensors", config.n_sensors},
                {"leak_size", config.leak_size},
                {"estimated_leak_size", config.candidate_leak_size()},
                {"noise_bound", config.noise_bound},
                {"noise_sigma_fraction", config.noise_sigma_fraction},
                {"seed", config.seed},
                {"repetitions", config.repetitions},
                {"iterations", config.iterations},
                {"leak_nodes", labels_array(s.leaks, model)},
                {"output", config.output},
                {"max_iterations", config.solver.max_iterations},
                {"flow_tolerance", config.solver.flow_tolerance}};
    return doc.dump(2) + "\n";
}

void write_outputs(const std::string& directory, const ExperimentConfig& config, const HydraulicModel& model,
                   const SweepResult& result, OutputFormat format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw Error("cannot create output directory '" + directory + "': " + ec.message());
    const fs::path dir(directory);
    if (format == OutputFormat::csv) {
        write_file((dir / "runs.csv").string(), runs_csv(result, model, config.n_sensors, config.iterations));
        write_file((dir / "aggregates.csv").string(), aggregates_csv(result));
    } else {
        write_file((dir / "runs.json").string(), runs_json(result, model, config.n_sensors, config.iterations));
        write_file((dir / "aggregates.json").string(), aggregates_json(result));
    }
    write_file((dir / "config.json").string(), config_json(config, model));
}

std::string pressures_csv(const PressureMatrix& pressures, const HydraulicModel& model) {
    std::ostringstream out;
    out << "step";
    for (NodeId id : pressures.row_ids()) out << ',' << model.label(id);
    out << '\n';
    for (std::size_t t = 0; t < pressures.steps(); ++t) {
        out << t;
        for (std::size_t r = 0; r < pressures.rows(); ++r) out << ',' << format_double(pressures.at(r, t));
        out << '\n';
    }
    return out.str();
}

std::string pressures_json(const PressureMatrix& pressures, const HydraulicModel& model) {
    json doc = {{"steps", pressures.steps()}, {"nodes", labels_array(pressures.row_ids(), model)}};
    json values = json::object();
    for (std::size_t r = 0; r < pressures.rows(); ++r) {
        json series = json::array();
        for (double v : pressures.row(r)) series.push_back(number_or_null(v));
        values[model.label(pressures.row_ids()[r])] = std::move(series);
    }
    doc["pressures"] = std::move(values);
    return doc.dump(2) + "\n";
}

PressureMatrix parse_pressures_csv(std::string_view text, const HydraulicModel& model) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        if (trim(raw).empty()) continue;
        auto cells = split(trim(raw), ',');
        for (auto& c : cells) c = std::string(trim(c));
        lines.emplace_back(line_no, std::move(cells));
    }
    if (lines.empty()) throw ParseError("empty pressure table", 0);

    const auto& header = lines.front().second;
    if (header.size() < 2) throw ParseError("pressure table has no node columns", lines.front().first);
    std::vector<NodeId> columns;
    for (std::size_t c = 1; c < header.size(); ++c) {
        auto id = model.find(header[c]);
        if (!id) throw ParseError("pressure column names unknown node '" + header[c] + "'", lines.front().first);
        columns.push_back(*id);
    }
    auto rows = canonical(columns);
    if (rows.size() != columns.size()) throw ParseError("pressure table repeats a node column", lines.front().first);

    const std::size_t steps = lines.size() - 1;
    if (steps != model.steps())
        throw Error("pressure table has " + std::to_string(steps) + " rows, the model has " +
                    std::to_string(model.steps()) + " steps");
    PressureMatrix out(rows, steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const auto& [ln, cells] = lines[t + 1];
        if (cells.size() != header.size()) throw ParseError("row has the wrong number of cells", ln);
        for (std::size_t c = 1; c < cells.size(); ++c)
            out.at(*out.row_of(columns[c - 1]), t) = parse_double(cells[c], ln, "pressure");
    }
    return out;
}

}  // namespace leakloc
