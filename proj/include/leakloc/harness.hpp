#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leakloc/leak_sim.hpp"
#include "leakloc/metrics.hpp"
#include "leakloc/network.hpp"
#include "leakloc/solver.hpp"

namespace leakloc {

/// Experiment description, normally read from a `key = value` file (see README).
struct ExperimentConfig {
    std::string model_path;
    std::vector<std::string> allowed;     // empty: every junction
    std::size_t n_sensors = 3;            // stationary sensors plus the mobile one
    double leak_size = 6.38;              // true leak, m3/h
    std::optional<double> estimated_leak_size;  // used for candidate simulations; defaults to leak_size
    double noise_bound = 0.1;
    double noise_sigma_fraction = 0.5;
    std::uint64_t seed = 0;
    std::size_t repetitions = 10;
    std::size_t iterations = 3;           // localization passes per run (1 = no shift)
    std::vector<std::string> leak_nodes;  // empty: every junction
    std::string output;                   // output directory
    SolverSettings solver;

    double candidate_leak_size() const { return estimated_leak_size.value_or(leak_size); }
    void validate() const;
};

/// Parses the key-value format. Relative model paths are resolved against
/// `base_dir` when it is given.
ExperimentConfig parse_config(std::string_view text, const std::string& base_dir = {});
ExperimentConfig load_config(const std::string& path);

struct RunIteration {
    std::vector<NodeId> sensors;
    NodeId selected;
    IterationMetrics metrics;
    double rmse_best = 0.0;
};

struct RunRecord {
    NodeId leak_node;
    std::size_t repetition = 0;
    bool excluded = false;
    std::string error;  // why the run was excluded
    std::vector<RunIteration> iterations;
};

struct AggregateRow {
    std::size_t n_sensors = 0;
    std::size_t iteration = 0;
    std::size_t count = 0;     // runs contributing
    std::size_t excluded = 0;  // runs left out after failing
    double mean_d_leak = 0.0;
    double std_d_leak = 0.0;
    double mean_d_sensor = 0.0;
    double std_d_sensor = 0.0;
    double mean_rank = 0.0;
    double std_rank = 0.0;
};

struct SweepResult {
    std::vector<RunRecord> runs;  // ordered by (leak node, repetition)
    std::vector<AggregateRow> aggregates;
    std::size_t excluded = 0;
};

/// Seed for the sensor draw of one run.
std::uint64_t run_seed(std::uint64_t master, NodeId leak_node, std::size_t repetition);
/// Seed for the noised measurement of one leak scenario; shared by every
/// repetition so that a recorded scenario can be replayed.
std::uint64_t measurement_seed(std::uint64_t master, NodeId leak_node);

/// `count` distinct nodes drawn uniformly from `allowed`; the last one drawn
/// is intended for the mobile sensor.
std::vector<NodeId> draw_sensors(std::span<const NodeId> allowed, std::size_t count, std::uint64_t seed);

/// Synthetic leak sweep: every (leak node, repetition) pair gets random
/// sensors, a noised measurement and an iterative localization.
SweepResult run_sweep(const ExperimentConfig& config, const HydraulicModel& model, unsigned workers = 1);

/// Same protocol with measurements read from a recording instead of being
/// simulated. The config must name exactly one (true) leak node.
SweepResult run_replay(const ExperimentConfig& config, const HydraulicModel& model, const PressureMatrix& recorded,
                       unsigned workers = 1);

/// Mean and population standard deviation per iteration over non-excluded runs.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs, std::size_t n_sensors,
                                    std::size_t iterations);

std::string runs_csv(const SweepResult& result, const HydraulicModel& model, std::size_t n_sensors,
                     std::size_t iterations);
std::string aggregates_csv(const SweepResult& result);
std::string runs_json(const SweepResult& result, const HydraulicModel& model, std::size_t n_sensors,
                      std::size_t iterations);
std::string aggregates_json(const SweepResult& result);
std::string config_json(const ExperimentConfig& config, const HydraulicModel& model);

enum class OutputFormat { csv, json };

/// Writes runs, aggregates and the resolved config into `directory`.
void write_outputs(const std::string& directory, const ExperimentConfig& config, const HydraulicModel& model,
                   const SweepResult& result, OutputFormat format);

/// Pressure table: a `step` column followed by one column per node label.
std::string pressures_csv(const PressureMatrix& pressures, const HydraulicModel& model);
std::string pressures_json(const PressureMatrix& pressures, const HydraulicModel& model);

/// Reads a pressure table. The first column (step index or timestamp) is
/// ignored; there must be exactly one row per model time step.
PressureMatrix parse_pressures_csv(std::string_view text, const HydraulicModel& model);

}  // namespace leakloc
