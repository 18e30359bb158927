#include "leakloc/leak_sim.hpp"

#include <algorithm>
#include <cmath>

#include "leakloc/error.hpp"

namespace leakloc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

void NoiseSpec::validate() const {
    if (!(bound >= 0.0) || !std::isfinite(bound)) throw Error("noise bound must be finite and non-negative");
    if (!(sigma_fraction > 0.0) || sigma_fraction > 1.0) throw Error("noise sigma fraction must lie in (0, 1]");
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(label));
    h = splitmix64(h ^ a);
    return splitmix64(h ^ (b + 0x632BE59BD9B4E019ULL));
}

ClippedGaussian::ClippedGaussian(std::uint64_t seed, double bound, double sigma_fraction)
    : engine_(seed), normal_(0.0, bound > 0.0 ? bound * sigma_fraction : 1.0), bound_(bound) {}

double ClippedGaussian::operator()() {
    if (bound_ == 0.0) return 0.0;
    return std::clamp(normal_(engine_), -bound_, bound_);
}

PressureMatrix noised_measurement(const HydraulicSolver& solver, const DemandMatrix& demands,
                                  const HeadSchedule& heads, const GroundTruth& truth, NoiseTrace* trace) {
    truth.noise.validate();
    if (truth.leak_node.index >= demands.junction_rows()) throw Error("the true leak must sit on a junction");
    if (!(truth.leak_size > 0.0)) throw Error("the true leak size must be positive");

    const std::uint64_t seed = truth.noise.seed;
    const double bound = truth.noise.bound;
    const double fraction = truth.noise.sigma_fraction;
    ClippedGaussian demand_noise(derive_seed(seed, "demand"), bound, fraction);
    ClippedGaussian leak_noise(derive_seed(seed, "leak"), bound, fraction);
    ClippedGaussian output_noise(derive_seed(seed, "output"), bound, fraction);

    DemandMatrix noisy = demands;
    if (trace) trace->demand.clear();
    for (std::size_t i = 0; i < demands.junction_rows(); ++i)
        for (std::size_t t = 0; t < demands.steps(); ++t) {
            const double e = demand_noise();
            if (trace) trace->demand.push_back(e);
            noisy.set(NodeId{i}, t, demands.at(NodeId{i}, t) * (1.0 + e));
        }
    const double e_leak = leak_noise();
    if (trace) trace->leak = e_leak;
    noisy = add_leak(noisy, truth.leak_node, truth.leak_size * (1.0 + e_leak));

    PressureMatrix pressures = solver.simulate(noisy, heads);
    if (trace) {
        trace->clean = pressures;
        trace->output.clear();
    }
    for (std::size_t r = 0; r < pressures.rows(); ++r)
        for (std::size_t t = 0; t < pressures.steps(); ++t) {
            const double e = output_noise();
            if (trace) trace->output.push_back(e);
            pressures.at(r, t) += e;
        }
    return pressures;
}

PressureMatrix noised_measurement(const HydraulicModel& model, const DemandMatrix& demands, const HeadSchedule& heads,
                                  const GroundTruth& truth, const SolverSettings& settings, NoiseTrace* trace) {
    return noised_measurement(HydraulicSolver(model, settings), demands, heads, truth, trace);
}

}  // namespace leakloc
