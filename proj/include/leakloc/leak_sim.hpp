#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "leakloc/network.hpp"
#include "leakloc/solver.hpp"

namespace leakloc {

/// Bounded noise: zero-mean Gaussian with sigma = bound * sigma_fraction,
/// clipped to [-bound, bound]. Demands and the leak are scaled by (1 + e);
/// output pressures get e added in metres.
struct NoiseSpec {
    double bound = 0.0;
    std::uint64_t seed = 0;
    double sigma_fraction = 0.5;

    void validate() const;
    double sigma() const noexcept { return bound * sigma_fraction; }
};

struct GroundTruth {
    NodeId leak_node;
    double leak_size = 0.0;  // m3/h
    NoiseSpec noise;
};

/// Deterministic child seed for a labelled purpose (splitmix64 over the
/// master seed, the label and two optional indices).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a = 0, std::uint64_t b = 0);

class ClippedGaussian {
public:
    ClippedGaussian(std::uint64_t seed, double bound, double sigma_fraction);

    /// Always 0 when the bound is 0; no engine state is consumed in that case.
    double operator()();

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
    double bound_;
};

/// Raw draws of each noise stage, filled when requested.
struct NoiseTrace {
    std::vector<double> demand;  // one per demand entry, row-major
    double leak = 0.0;
    std::vector<double> output;  // one per pressure entry, row-major
    PressureMatrix clean;        // pressures before the output stage
};

/// Synthetic "measured" pressures for every node: the leak is simulated on
/// perturbed demands with a perturbed magnitude, then bounded noise is added
/// to each pressure.
PressureMatrix noised_measurement(const HydraulicSolver& solver, const DemandMatrix& demands,
                                  const HeadSchedule& heads, const GroundTruth& truth, NoiseTrace* trace = nullptr);

PressureMatrix noised_measurement(const HydraulicModel& model, const DemandMatrix& demands, const HeadSchedule& heads,
                                  const GroundTruth& truth, const SolverSettings& settings = {},
                                  NoiseTrace* trace = nullptr);

}  // namespace leakloc
