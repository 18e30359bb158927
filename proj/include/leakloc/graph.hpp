#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "leakloc/network.hpp"

namespace leakloc {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Single-source shortest path lengths (m) over open pipes, weighted by pipe
/// length. Unreachable nodes get kUnreachable.
std::vector<double> shortest_paths(const HydraulicModel& model, NodeId source);

/// All-pairs graph distances, computed once per model and read-only after.
class DistanceOracle {
public:
    DistanceOracle() = default;
    explicit DistanceOracle(const HydraulicModel& model);

    std::size_t node_count() const noexcept { return nodes_; }
    double distance(NodeId a, NodeId b) const;
    bool connected(NodeId a, NodeId b) const { return distance(a, b) != kUnreachable; }

private:
    std::size_t nodes_ = 0;
    std::vector<double> table_;
};

/// Shortest open-pipe path length between two nodes; kUnreachable when none exists.
double graph_distance(const HydraulicModel& model, NodeId a, NodeId b);

}  // namespace leakloc
