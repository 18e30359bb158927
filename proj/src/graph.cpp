#include "leakloc/graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <utility>

#include "leakloc/error.hpp"

namespace leakloc {

std::vector<double> shortest_paths(const HydraulicModel& model, NodeId source) {
    const std::size_t m = model.node_count();
    if (source.index >= m) throw Error("distance source is out of range");

    std::vector<std::vector<std::pair<std::size_t, double>>> adjacent(m);
    for (const auto& p : model.pipes()) {
        if (p.status != PipeStatus::open) continue;
        adjacent[p.from.index].emplace_back(p.to.index, p.length);
        adjacent[p.to.index].emplace_back(p.from.index, p.length);
    }

    std::vector<double> dist(m, kUnreachable);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[source.index] = 0.0;
    queue.emplace(0.0, source.index);
    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (auto [v, w] : adjacent[u]) {
            const double candidate = d + w;
            if (candidate < dist[v]) {
                dist[v] = candidate;
                queue.emplace(candidate, v);
            }
        }
    }
    return dist;
}

DistanceOracle::DistanceOracle(const HydraulicModel& model) : nodes_(model.node_count()) {
    table_.reserve(nodes_ * nodes_);
    for (std::size_t s = 0; s < nodes_; ++s) {
        auto row = shortest_paths(model, NodeId{s});
        table_.insert(table_.end(), row.begin(), row.end());
    }
    // Path sums accumulate in opposite orders from the two ends; keep the
    // table exactly symmetric.
    for (std::size_t a = 0; a < nodes_; ++a)
        for (std::size_t b = a + 1; b < nodes_; ++b) {
            const double d = std::min(table_[a * nodes_ + b], table_[b * nodes_ + a]);
            table_[a * nodes_ + b] = d;
            table_[b * nodes_ + a] = d;
        }
}

double DistanceOracle::distance(NodeId a, NodeId b) const {
    if (a.index >= nodes_ || b.index >= nodes_) throw Error("distance query outside the model");
    return table_[a.index * nodes_ + b.index];
}

double graph_distance(const HydraulicModel& model, NodeId a, NodeId b) {
    if (b.index >= model.node_count()) throw Error("distance target is out of range");
    return shortest_paths(model, a)[b.index];
}

}  // namespace leakloc
