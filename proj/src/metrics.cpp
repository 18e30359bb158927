#include "leakloc/metrics.hpp"

#include <algorithm>

#include "leakloc/error.hpp"

namespace leakloc {

std::vector<IterationMetrics> evaluate(const LocalizationResult& result, NodeId truth,
                                       const DistanceOracle& distances) {
    if (truth.index >= distances.node_count()) throw Error("true leak node is outside the model");
    std::vector<IterationMetrics> out;
    out.reserve(result.iterations.size());
    for (const auto& it : result.iterations) {
        IterationMetrics m;
        m.d_leak = distances.distance(it.selected, truth);
        m.d_sensor = kUnreachable;
        for (NodeId s : it.sensors.sensors()) m.d_sensor = std::min(m.d_sensor, distances.distance(s, truth));
        auto rank = it.ranking.rank_of(truth);
        if (!rank) throw Error("true leak node #" + std::to_string(truth.index) + " is missing from the ranking");
        m.rank = *rank;
        out.push_back(m);
    }
    return out;
}

}  // namespace leakloc
