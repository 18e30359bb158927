#include "leakloc/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "leakloc/error.hpp"
#include "leakloc/parallel.hpp"

namespace leakloc {

namespace {

std::string describe(NodeId id) { return "node #" + std::to_string(id.index); }

bool contains(const std::vector<NodeId>& sorted, NodeId node) {
    return std::binary_search(sorted.begin(), sorted.end(), node);
}

}  // namespace

SensorConfig::SensorConfig(std::vector<NodeId> stationary, NodeId mobile, std::vector<NodeId> allowed,
                           std::vector<NodeId> history)
    : stationary_(canonical(stationary)), mobile_(mobile), allowed_(canonical(allowed)), history_(std::move(history)) {
    if (stationary_.size() != stationary.size()) throw Error("two stationary sensors share a node");
    if (!contains(allowed_, mobile_)) throw Error("mobile sensor at " + describe(mobile_) + " is not an allowed node");
    for (NodeId s : stationary_)
        if (!contains(allowed_, s)) throw Error("stationary sensor at " + describe(s) + " is not an allowed node");
    if (contains(stationary_, mobile_)) throw Error("mobile sensor shares " + describe(mobile_) + " with a stationary one");
}

std::vector<NodeId> SensorConfig::sensors() const {
    std::vector<NodeId> all = stationary_;
    all.insert(std::upper_bound(all.begin(), all.end(), mobile_), mobile_);
    return all;
}

bool SensorConfig::is_allowed(NodeId node) const { return contains(allowed_, node); }

bool SensorConfig::is_occupied(NodeId node) const { return node == mobile_ || contains(stationary_, node); }

// ---------------------------------------------------------------------------

CandidateRanking::CandidateRanking(std::vector<Candidate> candidates) : entries_(std::move(candidates)) {
    std::sort(entries_.begin(), entries_.end(), [](const Candidate& a, const Candidate& b) {
        if (a.rmse != b.rmse) return a.rmse < b.rmse;
        return a.node < b.node;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i)
        if (entries_[i - 1].node == entries_[i].node) throw Error("candidate ranked twice: " + describe(entries_[i].node));
}

const Candidate& CandidateRanking::head() const {
    if (entries_.empty()) throw Error("empty candidate ranking");
    return entries_.front();
}

std::optional<std::size_t> CandidateRanking::rank_of(NodeId node) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].node == node) return i + 1;
    return std::nullopt;
}

double rmse(const PressureMatrix& measured, const PressureMatrix& simulated) {
    if (!measured.same_shape(simulated)) throw Error("rmse needs matrices with identical rows and steps");
    const auto a = measured.values();
    const auto b = simulated.values();
    if (a.empty()) throw Error("rmse of an empty matrix");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

// ---------------------------------------------------------------------------

SensitivityBank SensitivityBank::build(const HydraulicSolver& solver, const DemandMatrix& demands,
                                       const HeadSchedule& heads, double leak_size, std::span<const NodeId> observed,
                                       unsigned workers) {
    if (!(leak_size > 0.0) || !std::isfinite(leak_size)) throw Error("estimated leak size must be positive");
    SensitivityBank bank;
    bank.observed_ = canonical(observed);
    if (bank.observed_.empty()) throw Error("no observed nodes");
    bank.leak_size_ = leak_size;
    const std::size_t count = solver.junction_count();
    bank.candidates_.resize(count);
    bank.failures_.resize(count);
    parallel_for(count, workers, [&](std::size_t m) {
        try {
            auto full = solver.simulate(add_leak(demands, NodeId{m}, leak_size), heads);
            bank.candidates_[m] = restrict(full, bank.observed_);
        } catch (const SolverError& e) {
            bank.failures_[m] = e.what();
        }
    });
    return bank;
}

const std::optional<PressureMatrix>& SensitivityBank::pressures(NodeId candidate) const {
    if (candidate.index >= candidates_.size()) throw Error(describe(candidate) + " is not a candidate");
    return candidates_[candidate.index];
}

const std::string& SensitivityBank::failure(NodeId candidate) const {
    if (candidate.index >= failures_.size()) throw Error(describe(candidate) + " is not a candidate");
    return failures_[candidate.index];
}

CandidateRanking SensitivityBank::rank(const PressureMatrix& measured) const {
    for (NodeId id : measured.row_ids())
        if (!contains(observed_, id)) throw Error("sensor " + describe(id) + " is outside the observed set");
    std::vector<Candidate> scores;
    scores.reserve(candidates_.size());
    bool any = false;
    for (std::size_t m = 0; m < candidates_.size(); ++m) {
        if (!candidates_[m]) {
            scores.push_back(Candidate{NodeId{m}, std::numeric_limits<double>::infinity(), true});
            continue;
        }
        any = true;
        scores.push_back(Candidate{NodeId{m}, rmse(measured, restrict(*candidates_[m], measured.row_ids())), false});
    }
    if (!any) throw SolverError("every candidate simulation failed");
    return CandidateRanking(std::move(scores));
}

CandidateRanking rank_candidates(const HydraulicModel& model, const PressureMatrix& measured,
                                 std::span<const NodeId> sensors, const DemandMatrix& demands,
                                 const HeadSchedule& heads, double leak_size, const SolverSettings& settings,
                                 unsigned workers) {
    if (sensors.empty()) throw Error("at least one sensor is required");
    auto rows = canonical(sensors);
    if (measured.row_ids() != rows) throw Error("measured pressures do not cover exactly the sensor set");
    HydraulicSolver solver(model, settings);
    return SensitivityBank::build(solver, demands, heads, leak_size, rows, workers).rank(measured);
}

LocalizationStep localize_once(const HydraulicModel& model, const PressureMatrix& measured,
                               std::span<const NodeId> sensors, const DemandMatrix& demands,
                               const HeadSchedule& heads, double leak_size, const SolverSettings& settings,
                               unsigned workers) {
    auto ranking = rank_candidates(model, measured, sensors, demands, heads, leak_size, settings, workers);
    const NodeId selected = ranking.head().node;
    return LocalizationStep{selected, std::move(ranking)};
}

// ---------------------------------------------------------------------------

ShiftResult shift_mobile(const SensorConfig& config, NodeId selected, const DistanceOracle& distances) {
    std::vector<NodeId> history = config.history();
    history.push_back(config.mobile());

    if (config.is_allowed(selected) && !config.is_occupied(selected))
        return ShiftResult{SensorConfig(config.stationary(), selected, config.allowed(), std::move(history)), true};

    std::optional<NodeId> best;
    double best_distance = kUnreachable;
    for (NodeId node : config.allowed()) {
        if (config.is_occupied(node)) continue;
        const double d = distances.distance(selected, node);
        // allowed() is ascending, so strict '<' keeps the lowest index on ties.
        if (d < best_distance) {
            best_distance = d;
            best = node;
        }
    }
    if (!best) return ShiftResult{config, false};
    return ShiftResult{SensorConfig(config.stationary(), *best, config.allowed(), std::move(history)), true};
}

void MeasurementSource::require(std::span<const NodeId> nodes, const HydraulicModel& model) const {
    for (NodeId node : nodes)
        if (!covers(node)) throw Error("no measurement recorded for node '" + model.label(node) + "'");
}

LocalizationResult iterative_localize(const HydraulicModel& model, const SensitivityBank& bank,
                                      const MeasurementSource& source, const SensorConfig& initial,
                                      std::size_t iterations, const DistanceOracle& distances) {
    if (iterations < 1) throw Error("at least one localization iteration is required");
    source.require(initial.sensors(), model);
    source.require(initial.allowed(), model);
    for (NodeId node : initial.allowed())
        if (!contains(bank.observed(), node))
            throw Error("sensitivity bank does not observe allowed node '" + model.label(node) + "'");

    LocalizationResult result;
    SensorConfig config = initial;
    bool shifted = false;
    for (std::size_t i = 0; i < iterations; ++i) {
        if (i > 0) {
            auto moved = shift_mobile(config, result.iterations.back().selected, distances);
            config = std::move(moved.config);
            shifted = moved.shifted;
        }
        auto ranking = bank.rank(source.acquire(config.sensors()));
        const NodeId selected = ranking.head().node;
        result.iterations.push_back(IterationRecord{config, std::move(ranking), selected, shifted});
    }
    result.final_node = result.iterations.back().selected;
    return result;
}

LocalizationResult iterative_localize(const HydraulicModel& model, const MeasurementSource& source,
                                      const SensorConfig& initial, const DemandMatrix& demands,
                                      const HeadSchedule& heads, double leak_size, std::size_t iterations,
                                      const SolverSettings& settings, unsigned workers) {
    if (iterations < 1) throw Error("at least one localization iteration is required");
    // Fail on missing recordings before any hydraulics run.
    source.require(initial.sensors(), model);
    source.require(initial.allowed(), model);
    HydraulicSolver solver(model, settings);
    auto bank = SensitivityBank::build(solver, demands, heads, leak_size, initial.allowed(), workers);
    return iterative_localize(model, bank, source, initial, iterations, DistanceOracle(model));
}

}  // namespace leakloc
