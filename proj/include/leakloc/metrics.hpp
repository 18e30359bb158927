#pragma once

#include <cstddef>
#include <vector>

#include "leakloc/graph.hpp"
#include "leakloc/localization.hpp"

namespace leakloc {

struct IterationMetrics {
    double d_leak = 0.0;    // graph distance from the selected node to the true leak (m)
    double d_sensor = 0.0;  // graph distance from the nearest sensor to the true leak (m)
    std::size_t rank = 0;   // 1-based position of the true leak in the ranking
};

std::vector<IterationMetrics> evaluate(const LocalizationResult& result, NodeId truth,
                                       const DistanceOracle& distances);

}  // namespace leakloc
