#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace leakloc {

/// Dense node index assigned at model load. Junctions occupy 0..J-1 in file
/// order, reservoirs follow at J..M-1. The string label lives in the model.
struct NodeId {
    std::size_t index = 0;

    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

enum class PipeStatus { open, closed };

struct Junction {
    std::string label;
    double elevation = 0.0;    // m
    double base_demand = 0.0;  // m3/h
    std::string pattern;       // empty: constant multiplier 1
};

struct Reservoir {
    std::string label;
    double head = 0.0;          // m
    std::string head_pattern;   // empty: constant head
};

struct Pipe {
    std::string label;
    NodeId from;
    NodeId to;
    double length = 0.0;       // m
    double diameter_mm = 0.0;  // mm
    double roughness = 0.0;    // Hazen-Williams C
    PipeStatus status = PipeStatus::open;
};

struct Pattern {
    std::string label;
    std::vector<double> multipliers;
};

struct TimeConfig {
    std::size_t steps = 24;
    double step_seconds = 3600.0;
    double pattern_step_seconds = 3600.0;

    friend bool operator==(const TimeConfig&, const TimeConfig&) = default;
};

struct Coordinate {
    double x = 0.0;
    double y = 0.0;
};

/// Immutable description of a water distribution network.
///
/// Construction validates the structural invariants (unique labels, positive
/// pipe geometry, resolvable pattern references). Hydraulic solvability, i.e.
/// every junction reaching a reservoir over open pipes, is a separate query
/// because an empty or partially built model is still a legal value.
class HydraulicModel {
public:
    HydraulicModel() = default;
    HydraulicModel(std::string title, std::vector<Junction> junctions, std::vector<Reservoir> reservoirs,
                   std::vector<Pipe> pipes, std::vector<Pattern> patterns, TimeConfig times,
                   std::vector<std::optional<Coordinate>> coordinates);

    const std::string& title() const noexcept { return title_; }
    const std::vector<Junction>& junctions() const noexcept { return junctions_; }
    const std::vector<Reservoir>& reservoirs() const noexcept { return reservoirs_; }
    const std::vector<Pipe>& pipes() const noexcept { return pipes_; }
    const std::vector<Pattern>& patterns() const noexcept { return patterns_; }
    const TimeConfig& times() const noexcept { return times_; }

    std::size_t node_count() const noexcept { return junctions_.size() + reservoirs_.size(); }
    std::size_t junction_count() const noexcept { return junctions_.size(); }
    std::size_t reservoir_count() const noexcept { return reservoirs_.size(); }
    std::size_t steps() const noexcept { return times_.steps; }

    bool is_junction(NodeId id) const noexcept { return id.index < junctions_.size(); }
    bool is_reservoir(NodeId id) const noexcept {
        return id.index >= junctions_.size() && id.index < node_count();
    }
    const Junction& junction(NodeId id) const;
    const Reservoir& reservoir(NodeId id) const;

    const std::string& label(NodeId id) const;
    std::optional<NodeId> find(std::string_view label) const;
    /// Like find() but throws Error naming the label when it is unknown.
    NodeId id(std::string_view label) const;

    /// Elevation for junctions; reservoirs report 0 (their pressure is defined as 0).
    double elevation(NodeId id) const;

    std::optional<Coordinate> coordinate(NodeId id) const;
    const Pattern* find_pattern(std::string_view label) const;

    /// All junction ids in dense order.
    std::vector<NodeId> junction_ids() const;

    /// First junction with no open-pipe path to any reservoir, if any.
    std::optional<NodeId> first_unreachable_junction() const;

    /// Throws Error naming the first junction cut off from every reservoir.
    void require_solvable() const;

private:
    std::string title_;
    std::vector<Junction> junctions_;
    std::vector<Reservoir> reservoirs_;
    std::vector<Pipe> pipes_;
    std::vector<Pattern> patterns_;
    TimeConfig times_;
    std::vector<std::optional<Coordinate>> coordinates_;
    std::unordered_map<std::string, NodeId> index_;
};

/// Assembles a HydraulicModel from labelled records. Pipes may reference
/// nodes declared later; resolution happens in build().
class ModelBuilder {
public:
    ModelBuilder& title(std::string text);
    ModelBuilder& add_junction(std::string label, double elevation, double base_demand, std::string pattern = {});
    ModelBuilder& add_reservoir(std::string label, double head, std::string head_pattern = {});
    ModelBuilder& add_pipe(std::string label, std::string from, std::string to, double length, double diameter_mm,
                           double roughness, PipeStatus status = PipeStatus::open);
    ModelBuilder& add_pattern(std::string label, std::vector<double> multipliers);
    ModelBuilder& times(TimeConfig config);
    ModelBuilder& coordinate(std::string label, double x, double y);

    /// Mutable access used by the INP reader for [DEMANDS] overrides and
    /// [STATUS] records; nullptr when the label is unknown.
    Junction* find_junction(std::string_view label);
    bool set_pipe_status(std::string_view label, PipeStatus status);
    bool has_pattern(std::string_view label) const;

    HydraulicModel build() const;

private:
    struct PendingPipe {
        std::string label;
        std::string from;
        std::string to;
        double length;
        double diameter_mm;
        double roughness;
        PipeStatus status;
    };

    std::string title_;
    std::vector<Junction> junctions_;
    std::vector<Reservoir> reservoirs_;
    std::vector<PendingPipe> pipes_;
    std::vector<Pattern> patterns_;
    TimeConfig times_;
    std::vector<std::pair<std::string, Coordinate>> coordinates_;
};

/// M x T demand grid in m3/h. Rows follow dense node order; reservoir rows
/// are structurally zero and reject writes of anything else.
class DemandMatrix {
public:
    DemandMatrix() = default;
    DemandMatrix(std::size_t junctions, std::size_t reservoirs, std::size_t steps);

    std::size_t rows() const noexcept { return junctions_ + reservoirs_; }
    std::size_t junction_rows() const noexcept { return junctions_; }
    std::size_t steps() const noexcept { return steps_; }

    double at(NodeId node, std::size_t step) const;
    void set(NodeId node, std::size_t step, double value);

    /// Column `step` restricted to junction rows.
    std::vector<double> junction_column(std::size_t step) const;

    friend bool operator==(const DemandMatrix&, const DemandMatrix&) = default;

private:
    std::size_t junctions_ = 0;
    std::size_t reservoirs_ = 0;
    std::size_t steps_ = 0;
    std::vector<double> values_;
};

/// K x T pressure-head grid (m) with an explicit, strictly ascending row set.
class PressureMatrix {
public:
    PressureMatrix() = default;
    PressureMatrix(std::vector<NodeId> rows, std::size_t steps);
    PressureMatrix(std::vector<NodeId> rows, std::size_t steps, std::vector<double> values);

    const std::vector<NodeId>& row_ids() const noexcept { return rows_; }
    std::size_t rows() const noexcept { return rows_.size(); }
    std::size_t steps() const noexcept { return steps_; }
    std::span<const double> values() const noexcept { return values_; }

    std::optional<std::size_t> row_of(NodeId node) const;
    bool same_shape(const PressureMatrix& other) const noexcept {
        return rows_ == other.rows_ && steps_ == other.steps_;
    }

    double at(std::size_t row, std::size_t step) const { return values_[row * steps_ + step]; }
    double& at(std::size_t row, std::size_t step) { return values_[row * steps_ + step]; }
    std::span<const double> row(std::size_t row) const {
        return std::span<const double>(values_).subspan(row * steps_, steps_);
    }

    friend bool operator==(const PressureMatrix&, const PressureMatrix&) = default;

private:
    std::vector<NodeId> rows_;
    std::size_t steps_ = 0;
    std::vector<double> values_;
};

/// Reservoir heads over time (m). Holds either one column broadcast to every
/// step or one column per step.
class HeadSchedule {
public:
    HeadSchedule() = default;
    HeadSchedule(std::size_t reservoirs, std::size_t steps, std::vector<double> values);
    /// A single head per reservoir, applied at every step.
    static HeadSchedule constant(std::vector<double> heads);

    std::size_t reservoirs() const noexcept { return reservoirs_; }
    std::size_t steps() const noexcept { return steps_; }
    double head(std::size_t reservoir, std::size_t step) const;

private:
    std::size_t reservoirs_ = 0;
    std::size_t steps_ = 0;
    std::vector<double> values_;
};

/// Nominal demands: base demand times the junction's pattern multiplier.
DemandMatrix demand_matrix(const HydraulicModel& model);

/// Nominal reservoir heads, expanded over time when a head pattern is set.
HeadSchedule head_schedule(const HydraulicModel& model);

/// Multiplier of `pattern` at hydraulic step `step` (wraps around).
double pattern_multiplier(const Pattern& pattern, const TimeConfig& times, std::size_t step);

/// Rows of `pressures` for the given sensors, in ascending dense order.
/// Duplicate sensors collapse; an id missing from the matrix throws Error.
PressureMatrix restrict(const PressureMatrix& pressures, std::span<const NodeId> sensors);

/// Copy of `demands` with `leak` (m3/h) added to every step of row `node`.
DemandMatrix add_leak(const DemandMatrix& demands, NodeId node, double leak);

/// Sorted, de-duplicated copy of a node list.
std::vector<NodeId> canonical(std::span<const NodeId> nodes);

}  // namespace leakloc
