#pragma once

// Small models and independent reference computations shared by the unit
// tests and the acceptance binary. Nothing here calls into the solver or the
// ranking code, so the checks stay independent of the code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "leakloc/network.hpp"
#include "leakloc/solver.hpp"

namespace leakloc::testing {

/// Hazen-Williams headloss in metres for a flow in m3/s, signed with the flow.
inline double hw_headloss(double flow_m3s, double length_m, double diameter_m, double roughness) {
    const double magnitude =
        10.667 * std::pow(roughness, -1.852) * std::pow(diameter_m, -4.871) * length_m * std::pow(std::abs(flow_m3s), 1.852);
    return flow_m3s < 0.0 ? -magnitude : magnitude;
}

/// Flow that Hazen-Williams assigns to a head drop (inverse of hw_headloss).
inline double hw_flow(double head_drop_m, double length_m, double diameter_m, double roughness) {
    const double r = 10.667 * std::pow(roughness, -1.852) * std::pow(diameter_m, -4.871) * length_m;
    const double magnitude = std::pow(std::abs(head_drop_m) / r, 1.0 / 1.852);
    return head_drop_m < 0.0 ? -magnitude : magnitude;
}

/// Reference RMSE over two equally shaped row-major tables.
inline double reference_rmse(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            const double d = a[i][j] - b[i][j];
            sum += d * d;
            ++count;
        }
    return std::sqrt(sum / static_cast<double>(count));
}

struct Residuals {
    double mass = 0.0;    // worst junction imbalance, m3/s
    double energy = 0.0;  // worst open-pipe mismatch between flow and head drop, as flow in m3/s
};

/// Mass balance at every junction and Hazen-Williams balance on every open
/// pipe, recomputed from the solved heads and flows.
inline Residuals residuals(const HydraulicModel& model, std::span<const double> demands_m3h, const StepResult& step) {
    const std::size_t n = model.junction_count();
    std::vector<double> balance(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) balance[j] = -demands_m3h[j] / 3600.0;
    Residuals out;
    for (std::size_t k = 0; k < model.pipes().size(); ++k) {
        const Pipe& pipe = model.pipes()[k];
        const double q = step.flows[k];
        if (pipe.status == PipeStatus::closed) {
            out.energy = std::max(out.energy, std::abs(q));
            continue;
        }
        if (pipe.from.index < n) balance[pipe.from.index] -= q;
        if (pipe.to.index < n) balance[pipe.to.index] += q;
        const double drop = step.heads[pipe.from.index] - step.heads[pipe.to.index];
        const double implied = hw_flow(drop, pipe.length, pipe.diameter_mm / 1000.0, pipe.roughness);
        out.energy = std::max(out.energy, std::abs(implied - q));
    }
    for (double b : balance) out.mass = std::max(out.mass, std::abs(b));
    return out;
}

/// Reservoir R (head 50) -- pipe P1 -- junction J (elevation 0).
inline HydraulicModel single_pipe(double demand_m3h, double length = 100.0, double diameter_mm = 100.0,
                                  double roughness = 130.0) {
    ModelBuilder b;
    b.add_junction("J", 0.0, demand_m3h);
    b.add_reservoir("R", 50.0);
    b.add_pipe("P1", "R", "J", length, diameter_mm, roughness);
    b.times(TimeConfig{1, 3600.0, 3600.0});
    return b.build();
}

/// Junctions a-b-c-... on a line fed by reservoir R at the first junction.
/// `lengths` holds the reservoir pipe followed by the junction pipes.
inline HydraulicModel path_network(std::size_t junctions, std::vector<double> lengths = {}, double demand = 1.0,
                                   std::size_t steps = 1) {
    if (lengths.empty()) lengths.assign(junctions, 100.0);
    ModelBuilder b;
    for (std::size_t i = 0; i < junctions; ++i) b.add_junction("j" + std::to_string(i), 0.0, demand);
    b.add_reservoir("R", 50.0);
    b.add_pipe("s", "R", "j0", lengths[0], 150.0, 120.0);
    for (std::size_t i = 1; i < junctions; ++i)
        b.add_pipe("p" + std::to_string(i), "j" + std::to_string(i - 1), "j" + std::to_string(i), lengths[i], 100.0,
                   120.0);
    b.times(TimeConfig{steps, 3600.0, 3600.0});
    return b.build();
}

/// Bellman-Ford over open pipes, used as a brute-force reference for Dijkstra.
inline std::vector<double> bellman_ford(const HydraulicModel& model, NodeId source) {
    std::vector<double> dist(model.node_count(), std::numeric_limits<double>::infinity());
    dist[source.index] = 0.0;
    for (std::size_t round = 0; round + 1 < model.node_count(); ++round) {
        bool changed = false;
        for (const Pipe& p : model.pipes()) {
            if (p.status == PipeStatus::closed) continue;
            const std::size_t a = p.from.index;
            const std::size_t c = p.to.index;
            if (dist[a] + p.length < dist[c]) dist[c] = dist[a] + p.length, changed = true;
            if (dist[c] + p.length < dist[a]) dist[a] = dist[c] + p.length, changed = true;
        }
        if (!changed) break;
    }
    return dist;
}

/// Agreement to `digits` significant digits.
inline bool same_digits(double a, double b, int digits = 6) {
    if (a == b) return true;
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= 0.5 * std::pow(10.0, 1 - digits) * scale;
}

/// Structural comparison of two models; returns a description of the first
/// difference, or an empty string when they agree.
inline std::string model_difference(const HydraulicModel& a, const HydraulicModel& b, int digits = 6) {
    if (a.title() != b.title()) return "title";
    if (a.junction_count() != b.junction_count()) return "junction count";
    if (a.reservoir_count() != b.reservoir_count()) return "reservoir count";
    if (a.pipes().size() != b.pipes().size()) return "pipe count";
    if (a.patterns().size() != b.patterns().size()) return "pattern count";
    if (!(a.times() == b.times())) return "times";
    for (std::size_t i = 0; i < a.junction_count(); ++i) {
        const auto& x = a.junctions()[i];
        const auto& y = b.junctions()[i];
        if (x.label != y.label || x.pattern != y.pattern || !same_digits(x.elevation, y.elevation, digits) ||
            !same_digits(x.base_demand, y.base_demand, digits))
            return "junction " + x.label;
    }
    for (std::size_t i = 0; i < a.reservoir_count(); ++i) {
        const auto& x = a.reservoirs()[i];
        const auto& y = b.reservoirs()[i];
        if (x.label != y.label || x.head_pattern != y.head_pattern || !same_digits(x.head, y.head, digits))
            return "reservoir " + x.label;
    }
    for (std::size_t i = 0; i < a.pipes().size(); ++i) {
        const auto& x = a.pipes()[i];
        const auto& y = b.pipes()[i];
        if (x.label != y.label || x.from != y.from || x.to != y.to || x.status != y.status ||
            !same_digits(x.length, y.length, digits) || !same_digits(x.diameter_mm, y.diameter_mm, digits) ||
            !same_digits(x.roughness, y.roughness, digits))
            return "pipe " + x.label;
    }
    for (std::size_t i = 0; i < a.patterns().size(); ++i) {
        const auto& x = a.patterns()[i];
        const auto& y = b.patterns()[i];
        if (x.label != y.label || x.multipliers.size() != y.multipliers.size()) return "pattern " + x.label;
        for (std::size_t k = 0; k < x.multipliers.size(); ++k)
            if (!same_digits(x.multipliers[k], y.multipliers[k], digits)) return "pattern " + x.label;
    }
    for (std::size_t i = 0; i < a.node_count(); ++i) {
        const auto p = a.coordinate(NodeId{i});
        const auto q = b.coordinate(NodeId{i});
        if (p.has_value() != q.has_value()) return "coordinate of " + a.label(NodeId{i});
        if (p && (!same_digits(p->x, q->x, digits) || !same_digits(p->y, q->y, digits)))
            return "coordinate of " + a.label(NodeId{i});
    }
    return {};
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("leakloc_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace leakloc::testing
