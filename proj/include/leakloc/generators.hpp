#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "leakloc/network.hpp"

namespace leakloc {

/// Rectangular street grid fed by reservoirs through supply mains at its
/// corners, starting with (0, 0). Junctions are labelled n0..n{rows*cols-1}
/// row-major, grid pipes p0.., reservoirs R1.. and their mains "main",
/// "main2", ...
struct GridOptions {
    std::size_t rows = 10;
    std::size_t cols = 10;
    double spacing = 100.0;          // m
    double base_demand = 2.0;        // m3/h per junction before jitter
    double demand_jitter = 0.3;      // demands drawn in base * [1 - jitter, 1 + jitter]
    double diameter_mm = 65.0;
    double roughness = 110.0;
    double elevation_jitter = 5.0;   // m, elevations drawn in [0, jitter]
    double reservoir_head = 60.0;    // m
    double main_diameter_mm = 300.0;
    double main_length = 200.0;      // m
    std::size_t feeds = 1;           // corners with a reservoir, 1..4
    double perimeter_diameter_mm = 150.0;  // outer ring pipes; 0 keeps diameter_mm
    std::size_t steps = 24;
    bool diurnal_pattern = true;
    std::uint64_t seed = 1;
};

HydraulicModel make_grid(const GridOptions& options);

/// Random looped network: a random spanning tree over the junctions plus
/// extra chords, with reservoirs attached to random junctions.
struct RandomNetworkOptions {
    std::size_t junctions = 20;
    std::size_t chords = 5;
    std::size_t reservoirs = 1;
    double min_length = 50.0;
    double max_length = 400.0;
    std::vector<double> diameters_mm = {80.0, 100.0, 150.0, 200.0, 250.0};
    double min_roughness = 90.0;
    double max_roughness = 140.0;
    double max_demand = 5.0;       // m3/h
    double max_elevation = 20.0;   // m
    double min_head = 50.0;        // m
    double max_head = 90.0;        // m
    std::size_t steps = 1;
    bool with_patterns = false;
    double closed_fraction = 0.0;  // share of chords written as closed pipes
    std::uint64_t seed = 1;
};

HydraulicModel make_random_network(const RandomNetworkOptions& options);

/// Hourly residential demand multipliers (mean 1).
std::vector<double> diurnal_multipliers();

}  // namespace leakloc
