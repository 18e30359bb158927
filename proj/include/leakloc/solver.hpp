#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "leakloc/network.hpp"

namespace leakloc {

struct SolverSettings {
    std::size_t max_iterations = 100;
    double flow_tolerance = 1e-4;       // relative: sum|dQ| / sum|Q|
    double initial_velocity = 0.3;      // m/s, sets the starting flow of every pipe
    double regularization_flow = 1e-6;  // m3/s; headloss is continued linearly below this flow

    /// Throws Error when a field is out of range.
    void validate() const;
};

/// Hydraulic state of one time step.
struct StepResult {
    std::vector<double> heads;  // m, one per node in dense order
    std::vector<double> flows;  // m3/s, one per pipe in model order; closed pipes carry 0
    std::size_t iterations = 0;
    double relative_change = 0.0;  // flow change of the final iteration
    bool converged = false;
    bool negative_pressure = false;
};

struct SolveResult {
    std::vector<StepResult> steps;
    PressureMatrix pressures;  // all nodes; head minus elevation, reservoirs 0
    std::size_t iterations_used = 0;  // max over steps
    bool converged = false;
    bool negative_pressure = false;
};

/// Hazen-Williams resistance r in h = r |q|^0.852 q (SI; diameter given in mm).
double hazen_williams_resistance(double length_m, double diameter_mm, double roughness);

/// Demand-driven steady-state solver using the Todini-Pilati global gradient
/// algorithm. Each call to solve_step or simulate is independent, so a single
/// instance can be shared between threads.
class HydraulicSolver {
public:
    /// Throws SolverError naming a junction that no reservoir can reach.
    explicit HydraulicSolver(const HydraulicModel& model, SolverSettings settings = {});

    /// Solves one step. `junction_demands` in m3/h (one per junction),
    /// `reservoir_heads` in m (one per reservoir).
    StepResult solve_step(std::span<const double> junction_demands, std::span<const double> reservoir_heads) const;

    /// Solves every column of `demands`; steps do not influence each other.
    SolveResult solve(const DemandMatrix& demands, const HeadSchedule& heads) const;

    /// Pressures for every node and step.
    PressureMatrix simulate(const DemandMatrix& demands, const HeadSchedule& heads) const;

    const SolverSettings& settings() const noexcept { return settings_; }
    std::size_t node_count() const noexcept { return junctions_ + reservoirs_; }
    std::size_t junction_count() const noexcept { return junctions_; }

private:
    struct Workspace;
    struct Link {
        std::size_t pipe;  // index into the model's pipe list
        std::size_t from;
        std::size_t to;
        double resistance;
        double initial_flow;
    };

    StepResult solve_step(Workspace& work, std::span<const double> junction_demands,
                          std::span<const double> reservoir_heads) const;

    SolverSettings settings_;
    std::size_t junctions_ = 0;
    std::size_t reservoirs_ = 0;
    std::size_t pipe_count_ = 0;
    std::vector<double> elevations_;
    std::vector<std::string> junction_labels_;
    std::vector<Link> links_;
};

StepResult solve_step(const HydraulicModel& model, std::span<const double> junction_demands,
                      std::span<const double> reservoir_heads, const SolverSettings& settings = {});

PressureMatrix simulate(const HydraulicModel& model, const DemandMatrix& demands, const HeadSchedule& heads,
                        const SolverSettings& settings = {});

}  // namespace leakloc
