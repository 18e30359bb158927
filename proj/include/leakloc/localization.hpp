#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leakloc/graph.hpp"
#include "leakloc/network.hpp"
#include "leakloc/solver.hpp"

namespace leakloc {

/// Pressure sensor layout: fixed sensors, one relocatable sensor, and the
/// nodes where a sensor may be installed at all.
class SensorConfig {
public:
    SensorConfig(std::vector<NodeId> stationary, NodeId mobile, std::vector<NodeId> allowed,
                 std::vector<NodeId> history = {});

    const std::vector<NodeId>& stationary() const noexcept { return stationary_; }
    NodeId mobile() const noexcept { return mobile_; }
    const std::vector<NodeId>& allowed() const noexcept { return allowed_; }
    /// Earlier mobile positions, oldest first.
    const std::vector<NodeId>& history() const noexcept { return history_; }

    /// stationary plus mobile, ascending.
    std::vector<NodeId> sensors() const;
    bool is_allowed(NodeId node) const;
    bool is_occupied(NodeId node) const;

    friend bool operator==(const SensorConfig&, const SensorConfig&) = default;

private:
    std::vector<NodeId> stationary_;
    NodeId mobile_;
    std::vector<NodeId> allowed_;
    std::vector<NodeId> history_;
};

struct Candidate {
    NodeId node;
    double rmse = 0.0;
    bool failed = false;  // the candidate's simulation did not solve; rmse is +inf

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Candidates ascending by (rmse, dense index).
class CandidateRanking {
public:
    CandidateRanking() = default;
    explicit CandidateRanking(std::vector<Candidate> candidates);

    const std::vector<Candidate>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const Candidate& head() const;
    /// 1-based position of `node`, if ranked.
    std::optional<std::size_t> rank_of(NodeId node) const;

    friend bool operator==(const CandidateRanking&, const CandidateRanking&) = default;

private:
    std::vector<Candidate> entries_;
};

/// Root mean square difference over every entry. Requires identical row
/// sets and step counts.
double rmse(const PressureMatrix& measured, const PressureMatrix& simulated);

/// Pressures of every candidate leak, recorded at a fixed set of observed
/// nodes. The simulations do not depend on measurements, so one bank serves
/// any number of rankings whose sensors lie within the observed set.
class SensitivityBank {
public:
    static SensitivityBank build(const HydraulicSolver& solver, const DemandMatrix& demands,
                                 const HeadSchedule& heads, double leak_size, std::span<const NodeId> observed,
                                 unsigned workers = 1);

    const std::vector<NodeId>& observed() const noexcept { return observed_; }
    std::size_t candidate_count() const noexcept { return candidates_.size(); }
    double leak_size() const noexcept { return leak_size_; }

    /// Simulated pressures for a leak at `candidate`, or nullopt when that
    /// simulation failed.
    const std::optional<PressureMatrix>& pressures(NodeId candidate) const;
    /// Solver message for a failed candidate; empty otherwise.
    const std::string& failure(NodeId candidate) const;

    /// Ranks every junction against `measured`, whose rows must equal the
    /// canonical sensor set. Throws when every candidate failed.
    CandidateRanking rank(const PressureMatrix& measured) const;

private:
    std::vector<NodeId> observed_;
    double leak_size_ = 0.0;
    std::vector<std::optional<PressureMatrix>> candidates_;
    std::vector<std::string> failures_;
};

CandidateRanking rank_candidates(const HydraulicModel& model, const PressureMatrix& measured,
                                 std::span<const NodeId> sensors, const DemandMatrix& demands,
                                 const HeadSchedule& heads, double leak_size, const SolverSettings& settings = {},
                                 unsigned workers = 1);

struct LocalizationStep {
    NodeId selected;
    CandidateRanking ranking;
};

LocalizationStep localize_once(const HydraulicModel& model, const PressureMatrix& measured,
                               std::span<const NodeId> sensors, const DemandMatrix& demands,
                               const HeadSchedule& heads, double leak_size, const SolverSettings& settings = {},
                               unsigned workers = 1);

struct ShiftResult {
    SensorConfig config;
    bool shifted = false;  // false: no free allowed node, config unchanged
};

/// Moves the mobile sensor onto `selected` when that node is allowed and has
/// no sensor. Otherwise it goes to the free allowed node nearest to
/// `selected` (ties by dense index). Stationary sensors never move.
ShiftResult shift_mobile(const SensorConfig& config, NodeId selected, const DistanceOracle& distances);

/// Recorded pressures standing in for field measurements. Acquiring a
/// sensor set returns those rows.
class MeasurementSource {
public:
    MeasurementSource() = default;
    explicit MeasurementSource(PressureMatrix recorded) : recorded_(std::move(recorded)) {}

    bool covers(NodeId node) const { return recorded_.row_of(node).has_value(); }
    /// Throws Error naming (via `model`) the first node without a recording.
    void require(std::span<const NodeId> nodes, const HydraulicModel& model) const;
    PressureMatrix acquire(std::span<const NodeId> sensors) const { return restrict(recorded_, sensors); }
    const PressureMatrix& recorded() const noexcept { return recorded_; }

private:
    PressureMatrix recorded_;
};

struct IterationRecord {
    SensorConfig sensors;
    CandidateRanking ranking;
    NodeId selected;
    bool shifted = false;  // the mobile sensor moved before this iteration
};

struct LocalizationResult {
    std::vector<IterationRecord> iterations;
    NodeId final_node;
};

/// Localize, shift the mobile sensor toward the best candidate, re-measure
/// and localize again, `iterations` times in total. The bank must observe
/// every allowed node.
LocalizationResult iterative_localize(const HydraulicModel& model, const SensitivityBank& bank,
                                      const MeasurementSource& source, const SensorConfig& initial,
                                      std::size_t iterations, const DistanceOracle& distances);

LocalizationResult iterative_localize(const HydraulicModel& model, const MeasurementSource& source,
                                      const SensorConfig& initial, const DemandMatrix& demands,
                                      const HeadSchedule& heads, double leak_size, std::size_t iterations,
                                      const SolverSettings& settings = {}, unsigned workers = 1);

}  // namespace leakloc
