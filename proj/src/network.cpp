#include "leakloc/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "leakloc/error.hpp"
#include "leakloc/text.hpp"

namespace leakloc {

namespace {

std::string node_name(NodeId id) { return "node #" + std::to_string(id.index); }

}  // namespace

HydraulicModel::HydraulicModel(std::string title, std::vector<Junction> junctions, std::vector<Reservoir> reservoirs,
                               std::vector<Pipe> pipes, std::vector<Pattern> patterns, TimeConfig times,
                               std::vector<std::optional<Coordinate>> coordinates)
    : title_(std::move(title)),
      junctions_(std::move(junctions)),
      reservoirs_(std::move(reservoirs)),
      pipes_(std::move(pipes)),
      patterns_(std::move(patterns)),
      times_(times),
      coordinates_(std::move(coordinates)) {
    const std::size_t m = node_count();
    if (coordinates_.empty()) coordinates_.resize(m);
    if (coordinates_.size() != m) throw Error("coordinate table does not match the node count");
    if (times_.steps == 0) throw Error("time horizon must have at least one step");
    if (!(times_.step_seconds > 0.0) || !(times_.pattern_step_seconds > 0.0))
        throw Error("time steps must be positive");

    std::unordered_set<std::string> pattern_labels;
    for (const auto& p : patterns_) {
        if (!is_valid_label(p.label)) throw Error("invalid pattern label '" + p.label + "'");
        if (p.multipliers.empty()) throw Error("pattern '" + p.label + "' has no multipliers");
        for (double v : p.multipliers)
            if (!std::isfinite(v)) throw Error("pattern '" + p.label + "' has a non-finite multiplier");
        if (!pattern_labels.insert(p.label).second) throw Error("duplicate pattern '" + p.label + "'");
    }
    auto check_pattern = [&](const std::string& ref, const std::string& owner) {
        if (!ref.empty() && !pattern_labels.contains(ref))
            throw Error("'" + owner + "' references unknown pattern '" + ref + "'");
    };

    index_.reserve(m);
    auto add_label = [&](const std::string& label, std::size_t i) {
        if (!is_valid_label(label)) throw Error("invalid node label '" + label + "'");
        if (!index_.emplace(label, NodeId{i}).second) throw Error("duplicate node label '" + label + "'");
    };
    for (std::size_t i = 0; i < junctions_.size(); ++i) {
        const auto& j = junctions_[i];
        add_label(j.label, i);
        if (!std::isfinite(j.elevation)) throw Error("junction '" + j.label + "' has a non-finite elevation");
        if (!std::isfinite(j.base_demand) || j.base_demand < 0.0)
            throw Error("junction '" + j.label + "' has a negative or non-finite demand");
        check_pattern(j.pattern, j.label);
    }
    for (std::size_t i = 0; i < reservoirs_.size(); ++i) {
        const auto& r = reservoirs_[i];
        add_label(r.label, junctions_.size() + i);
        if (!std::isfinite(r.head)) throw Error("reservoir '" + r.label + "' has a non-finite head");
        check_pattern(r.head_pattern, r.label);
    }

    std::unordered_set<std::string> pipe_labels;
    for (const auto& p : pipes_) {
        if (!is_valid_label(p.label)) throw Error("invalid pipe label '" + p.label + "'");
        if (!pipe_labels.insert(p.label).second) throw Error("duplicate pipe label '" + p.label + "'");
        if (p.from.index >= m || p.to.index >= m) throw Error("pipe '" + p.label + "' has a dangling endpoint");
        if (p.from == p.to) throw Error("pipe '" + p.label + "' connects a node to itself");
        if (!(p.length > 0.0) || !(p.diameter_mm > 0.0) || !(p.roughness > 0.0) || !std::isfinite(p.length) ||
            !std::isfinite(p.diameter_mm) || !std::isfinite(p.roughness))
            throw Error("pipe '" + p.label + "' needs positive finite length, diameter and roughness");
    }
}

const Junction& HydraulicModel::junction(NodeId id) const {
    if (!is_junction(id)) throw Error(node_name(id) + " is not a junction");
    return junctions_[id.index];
}

const Reservoir& HydraulicModel::reservoir(NodeId id) const {
    if (!is_reservoir(id)) throw Error(node_name(id) + " is not a reservoir");
    return reservoirs_[id.index - junctions_.size()];
}

const std::string& HydraulicModel::label(NodeId id) const {
    if (is_junction(id)) return junctions_[id.index].label;
    return reservoir(id).label;
}

std::optional<NodeId> HydraulicModel::find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeId HydraulicModel::id(std::string_view label) const {
    if (auto found = find(label)) return *found;
    throw Error("unknown node '" + std::string(label) + "'");
}

double HydraulicModel::elevation(NodeId id) const {
    if (is_junction(id)) return junctions_[id.index].elevation;
    reservoir(id);  // range check
    return 0.0;
}

std::optional<Coordinate> HydraulicModel::coordinate(NodeId id) const {
    if (id.index >= coordinates_.size()) throw Error(node_name(id) + " is out of range");
    return coordinates_[id.index];
}

const Pattern* HydraulicModel::find_pattern(std::string_view label) const {
    for (const auto& p : patterns_)
        if (p.label == label) return &p;
    return nullptr;
}

std::vector<NodeId> HydraulicModel::junction_ids() const {
    std::vector<NodeId> ids(junctions_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = NodeId{i};
    return ids;
}

std::optional<NodeId> HydraulicModel::first_unreachable_junction() const {
    const std::size_t m = node_count();
    std::vector<std::vector<std::size_t>> adjacent(m);
    for (const auto& p : pipes_) {
        if (p.status != PipeStatus::open) continue;
        adjacent[p.from.index].push_back(p.to.index);
        adjacent[p.to.index].push_back(p.from.index);
    }
    std::vector<bool> seen(m, false);
    std::queue<std::size_t> frontier;
    for (std::size_t r = junctions_.size(); r < m; ++r) {
        seen[r] = true;
        frontier.push(r);
    }
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : adjacent[u])
            if (!seen[v]) {
                seen[v] = true;
                frontier.push(v);
            }
    }
    for (std::size_t i = 0; i < junctions_.size(); ++i)
        if (!seen[i]) return NodeId{i};
    return std::nullopt;
}

void HydraulicModel::require_solvable() const {
    if (auto cut = first_unreachable_junction())
        throw Error("junction '" + label(*cut) + "' is not connected to any reservoir");
}

// ---------------------------------------------------------------------------

ModelBuilder& ModelBuilder::title(std::string text) {
    title_ = std::move(text);
    return *this;
}

ModelBuilder& ModelBuilder::add_junction(std::string label, double elevation, double base_demand,
                                         std::string pattern) {
    junctions_.push_back(Junction{std::move(label), elevation, base_demand, std::move(pattern)});
    return *this;
}

ModelBuilder& ModelBuilder::add_reservoir(std::string label, double head, std::string head_pattern) {
    reservoirs_.push_back(Reservoir{std::move(label), head, std::move(head_pattern)});
    return *this;
}

ModelBuilder& ModelBuilder::add_pipe(std::string label, std::string from, std::string to, double length,
                                     double diameter_mm, double roughness, PipeStatus status) {
    pipes_.push_back(
        PendingPipe{std::move(label), std::move(from), std::move(to), length, diameter_mm, roughness, status});
    return *this;
}

ModelBuilder& ModelBuilder::add_pattern(std::string label, std::vector<double> multipliers) {
    for (auto& p : patterns_)
        if (p.label == label) {
            // Repeated [PATTERNS] rows extend the sequence.
            p.multipliers.insert(p.multipliers.end(), multipliers.begin(), multipliers.end());
            return *this;
        }
    patterns_.push_back(Pattern{std::move(label), std::move(multipliers)});
    return *this;
}

ModelBuilder& ModelBuilder::times(TimeConfig config) {
    times_ = config;
    return *this;
}

ModelBuilder& ModelBuilder::coordinate(std::string label, double x, double y) {
    coordinates_.emplace_back(std::move(label), Coordinate{x, y});
    return *this;
}

Junction* ModelBuilder::find_junction(std::string_view label) {
    for (auto& j : junctions_)
        if (j.label == label) return &j;
    return nullptr;
}

bool ModelBuilder::set_pipe_status(std::string_view label, PipeStatus status) {
    for (auto& p : pipes_)
        if (p.label == label) {
            p.status = status;
            return true;
        }
    return false;
}

bool ModelBuilder::has_pattern(std::string_view label) const {
    return std::any_of(patterns_.begin(), patterns_.end(), [&](const Pattern& p) { return p.label == label; });
}

HydraulicModel ModelBuilder::build() const {
    std::unordered_map<std::string, NodeId> index;
    for (std::size_t i = 0; i < junctions_.size(); ++i) index.emplace(junctions_[i].label, NodeId{i});
    for (std::size_t i = 0; i < reservoirs_.size(); ++i)
        index.emplace(reservoirs_[i].label, NodeId{junctions_.size() + i});

    std::vector<Pipe> pipes;
    pipes.reserve(pipes_.size());
    for (const auto& p : pipes_) {
        auto from = index.find(p.from);
        auto to = index.find(p.to);
        if (from == index.end())
            throw Error("pipe '" + p.label + "' references undefined node '" + p.from + "'");
        if (to == index.end()) throw Error("pipe '" + p.label + "' references undefined node '" + p.to + "'");
        pipes.push_back(Pipe{p.label, from->second, to->second, p.length, p.diameter_mm, p.roughness, p.status});
    }

    std::vector<std::optional<Coordinate>> coordinates(junctions_.size() + reservoirs_.size());
    for (const auto& [label, xy] : coordinates_) {
        auto it = index.find(label);
        if (it == index.end()) throw Error("coordinate given for undefined node '" + label + "'");
        coordinates[it->second.index] = xy;
    }
    return HydraulicModel(title_, junctions_, reservoirs_, std::move(pipes), patterns_, times_,
                          std::move(coordinates));
}

// ---------------------------------------------------------------------------

DemandMatrix::DemandMatrix(std::size_t junctions, std::size_t reservoirs, std::size_t steps)
    : junctions_(junctions), reservoirs_(reservoirs), steps_(steps), values_((junctions + reservoirs) * steps, 0.0) {}

double DemandMatrix::at(NodeId node, std::size_t step) const {
    if (node.index >= rows() || step >= steps_) throw Error("demand matrix index out of range");
    return values_[node.index * steps_ + step];
}

void DemandMatrix::set(NodeId node, std::size_t step, double value) {
    if (node.index >= rows() || step >= steps_) throw Error("demand matrix index out of range");
    if (!std::isfinite(value)) throw Error("demand must be finite");
    if (node.index >= junctions_ && value != 0.0) throw Error("reservoir rows of a demand matrix must stay zero");
    values_[node.index * steps_ + step] = value;
}

std::vector<double> DemandMatrix::junction_column(std::size_t step) const {
    std::vector<double> column(junctions_);
    for (std::size_t i = 0; i < junctions_; ++i) column[i] = values_[i * steps_ + step];
    return column;
}

// ---------------------------------------------------------------------------

PressureMatrix::PressureMatrix(std::vector<NodeId> rows, std::size_t steps)
    : PressureMatrix(std::move(rows), steps, {}) {}

PressureMatrix::PressureMatrix(std::vector<NodeId> rows, std::size_t steps, std::vector<double> values)
    : rows_(std::move(rows)), steps_(steps), values_(std::move(values)) {
    if (values_.empty()) values_.assign(rows_.size() * steps_, 0.0);
    if (values_.size() != rows_.size() * steps_) throw Error("pressure matrix value count does not match its shape");
    for (std::size_t i = 1; i < rows_.size(); ++i)
        if (!(rows_[i - 1] < rows_[i])) throw Error("pressure matrix rows must be strictly ascending");
}

std::optional<std::size_t> PressureMatrix::row_of(NodeId node) const {
    auto it = std::lower_bound(rows_.begin(), rows_.end(), node);
    if (it == rows_.end() || *it != node) return std::nullopt;
    return static_cast<std::size_t>(it - rows_.begin());
}

// ---------------------------------------------------------------------------

HeadSchedule::HeadSchedule(std::size_t reservoirs, std::size_t steps, std::vector<double> values)
    : reservoirs_(reservoirs), steps_(steps), values_(std::move(values)) {
    if (steps_ == 0) throw Error("head schedule needs at least one step");
    if (values_.size() != reservoirs_ * steps_) throw Error("head schedule value count does not match its shape");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error("reservoir head must be finite");
}

HeadSchedule HeadSchedule::constant(std::vector<double> heads) {
    const std::size_t n = heads.size();
    return HeadSchedule(n, 1, std::move(heads));
}

double HeadSchedule::head(std::size_t reservoir, std::size_t step) const {
    if (reservoir >= reservoirs_) throw Error("reservoir index out of range");
    return values_[reservoir * steps_ + (steps_ == 1 ? 0 : step)];
}

double pattern_multiplier(const Pattern& pattern, const TimeConfig& times, std::size_t step) {
    const double elapsed = static_cast<double>(step) * times.step_seconds;
    const auto slot = static_cast<std::size_t>(std::floor(elapsed / times.pattern_step_seconds + 1e-9));
    return pattern.multipliers[slot % pattern.multipliers.size()];
}

DemandMatrix demand_matrix(const HydraulicModel& model) {
    const auto& times = model.times();
    DemandMatrix d(model.junction_count(), model.reservoir_count(), times.steps);
    for (std::size_t i = 0; i < model.junction_count(); ++i) {
        const auto& j = model.junctions()[i];
        const Pattern* pattern = j.pattern.empty() ? nullptr : model.find_pattern(j.pattern);
        for (std::size_t t = 0; t < times.steps; ++t) {
            const double factor = pattern ? pattern_multiplier(*pattern, times, t) : 1.0;
            d.set(NodeId{i}, t, j.base_demand * factor);
        }
    }
    return d;
}

HeadSchedule head_schedule(const HydraulicModel& model) {
    const auto& times = model.times();
    const std::size_t r = model.reservoir_count();
    std::vector<double> values(r * times.steps);
    for (std::size_t k = 0; k < r; ++k) {
        const auto& res = model.reservoirs()[k];
        const Pattern* pattern = res.head_pattern.empty() ? nullptr : model.find_pattern(res.head_pattern);
        for (std::size_t t = 0; t < times.steps; ++t)
            values[k * times.steps + t] = res.head * (pattern ? pattern_multiplier(*pattern, times, t) : 1.0);
    }
    return HeadSchedule(r, times.steps, std::move(values));
}

std::vector<NodeId> canonical(std::span<const NodeId> nodes) {
    std::vector<NodeId> out(nodes.begin(), nodes.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

PressureMatrix restrict(const PressureMatrix& pressures, std::span<const NodeId> sensors) {
    auto rows = canonical(sensors);
    const std::size_t steps = pressures.steps();
    std::vector<double> values;
    values.reserve(rows.size() * steps);
    for (NodeId id : rows) {
        auto row = pressures.row_of(id);
        if (!row) throw Error("sensor " + node_name(id) + " is not a row of the pressure matrix");
        auto src = pressures.row(*row);
        values.insert(values.end(), src.begin(), src.end());
    }
    return PressureMatrix(std::move(rows), steps, std::move(values));
}

DemandMatrix add_leak(const DemandMatrix& demands, NodeId node, double leak) {
    if (node.index >= demands.rows()) throw Error("leak " + node_name(node) + " is out of range");
    if (node.index >= demands.junction_rows())
        throw Error("cannot place a leak on reservoir " + node_name(node));
    if (!std::isfinite(leak) || leak < 0.0) throw Error("leak size must be finite and non-negative");
    DemandMatrix out = demands;
    for (std::size_t t = 0; t < demands.steps(); ++t) out.set(node, t, demands.at(node, t) + leak);
    return out;
}

}  // namespace leakloc
