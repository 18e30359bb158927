#include "leakloc/generators.hpp"

#include <random>
#include <set>
#include <string>

#include "leakloc/error.hpp"

namespace leakloc {

namespace {

std::string junction_label(std::size_t i) { return "n" + std::to_string(i); }

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

std::vector<double> diurnal_multipliers() {
    return {0.55, 0.45, 0.40, 0.40, 0.45, 0.65, 1.05, 1.45, 1.50, 1.35, 1.20, 1.15,
            1.20, 1.15, 1.05, 1.00, 1.05, 1.20, 1.40, 1.45, 1.30, 1.10, 0.85, 0.65};
}

HydraulicModel make_grid(const GridOptions& o) {
    if (o.rows == 0 || o.cols == 0) throw Error("grid needs at least one row and one column");
    if (o.feeds < 1 || o.feeds > 4) throw Error("grid feeds must be between 1 and 4");
    if (o.demand_jitter < 0.0 || o.demand_jitter > 1.0) throw Error("demand jitter must lie in [0, 1]");
    std::mt19937_64 rng(o.seed);
    ModelBuilder b;
    b.title(std::to_string(o.rows) + "x" + std::to_string(o.cols) + " grid network");
    const std::string pattern = o.diurnal_pattern ? "diurnal" : "";
    if (o.diurnal_pattern) b.add_pattern(pattern, diurnal_multipliers());

    for (std::size_t r = 0; r < o.rows; ++r)
        for (std::size_t c = 0; c < o.cols; ++c) {
            const std::size_t i = r * o.cols + c;
            const double demand = o.base_demand * uniform(rng, 1.0 - o.demand_jitter, 1.0 + o.demand_jitter);
            const double elevation = o.elevation_jitter > 0.0 ? uniform(rng, 0.0, o.elevation_jitter) : 0.0;
            b.add_junction(junction_label(i), elevation, demand, pattern);
            b.coordinate(junction_label(i), static_cast<double>(c) * o.spacing, static_cast<double>(r) * o.spacing);
        }
    // Corners in feed order: (0, 0), opposite, then the remaining two.
    const std::size_t last_row = (o.rows - 1) * o.cols;
    const std::size_t corners[4] = {0, last_row + o.cols - 1, o.cols - 1, last_row};
    for (std::size_t f = 0; f < o.feeds; ++f) {
        const std::string label = "R" + std::to_string(f + 1);
        const std::size_t at = corners[f];
        const double x = static_cast<double>(at % o.cols) * o.spacing;
        const double y = static_cast<double>(at / o.cols) * o.spacing;
        b.add_reservoir(label, o.reservoir_head);
        b.coordinate(label, at % o.cols == 0 ? x - o.main_length : x + o.main_length, y);
    }

    const double ring = o.perimeter_diameter_mm > 0.0 ? o.perimeter_diameter_mm : o.diameter_mm;
    std::size_t pipe = 0;
    for (std::size_t r = 0; r < o.rows; ++r)
        for (std::size_t c = 0; c < o.cols; ++c) {
            const std::size_t i = r * o.cols + c;
            const bool edge_row = r == 0 || r + 1 == o.rows;
            const bool edge_col = c == 0 || c + 1 == o.cols;
            if (c + 1 < o.cols)
                b.add_pipe("p" + std::to_string(pipe++), junction_label(i), junction_label(i + 1), o.spacing,
                           edge_row ? ring : o.diameter_mm, o.roughness);
            if (r + 1 < o.rows)
                b.add_pipe("p" + std::to_string(pipe++), junction_label(i), junction_label(i + o.cols), o.spacing,
                           edge_col ? ring : o.diameter_mm, o.roughness);
        }
    for (std::size_t f = 0; f < o.feeds; ++f)
        b.add_pipe(f == 0 ? "main" : "main" + std::to_string(f + 1), "R" + std::to_string(f + 1),
                   junction_label(corners[f]), o.main_length, o.main_diameter_mm, o.roughness);
    b.times(TimeConfig{o.steps, 3600.0, 3600.0});
    return b.build();
}

HydraulicModel make_random_network(const RandomNetworkOptions& o) {
    if (o.junctions == 0 || o.reservoirs == 0) throw Error("random network needs junctions and a reservoir");
    if (o.diameters_mm.empty()) throw Error("random network needs candidate diameters");
    std::mt19937_64 rng(o.seed);
    auto pick_diameter = [&] {
        return o.diameters_mm[std::uniform_int_distribution<std::size_t>(0, o.diameters_mm.size() - 1)(rng)];
    };
    auto pick_junction = [&](std::size_t upto) { return std::uniform_int_distribution<std::size_t>(0, upto - 1)(rng); };

    ModelBuilder b;
    b.title("random looped network, seed " + std::to_string(o.seed));
    std::string pattern;
    if (o.with_patterns) {
        pattern = "demand";
        std::vector<double> multipliers(o.steps > 1 ? o.steps : 6);
        for (double& m : multipliers) m = uniform(rng, 0.3, 1.7);
        b.add_pattern(pattern, std::move(multipliers));
    }
    for (std::size_t i = 0; i < o.junctions; ++i) {
        b.add_junction(junction_label(i), uniform(rng, 0.0, o.max_elevation), uniform(rng, 0.0, o.max_demand),
                       pattern);
        b.coordinate(junction_label(i), uniform(rng, 0.0, 2000.0), uniform(rng, 0.0, 2000.0));
    }

    std::set<std::pair<std::size_t, std::size_t>> edges;
    std::size_t pipe = 0;
    auto add = [&](std::size_t a, std::size_t c, PipeStatus status) {
        edges.emplace(std::min(a, c), std::max(a, c));
        b.add_pipe("p" + std::to_string(pipe++), junction_label(a), junction_label(c),
                   uniform(rng, o.min_length, o.max_length), pick_diameter(),
                   uniform(rng, o.min_roughness, o.max_roughness), status);
    };
    for (std::size_t i = 1; i < o.junctions; ++i) add(pick_junction(i), i, PipeStatus::open);

    const std::size_t max_edges = o.junctions * (o.junctions - 1) / 2;
    for (std::size_t k = 0; k < o.chords && edges.size() < max_edges; ++k) {
        std::size_t a = 0;
        std::size_t c = 0;
        do {
            a = pick_junction(o.junctions);
            c = pick_junction(o.junctions);
        } while (a == c || edges.contains({std::min(a, c), std::max(a, c)}));
        const bool closed = o.closed_fraction > 0.0 && uniform(rng, 0.0, 1.0) < o.closed_fraction;
        add(a, c, closed ? PipeStatus::closed : PipeStatus::open);
    }

    for (std::size_t r = 0; r < o.reservoirs; ++r) {
        const std::string label = "R" + std::to_string(r + 1);
        b.add_reservoir(label, uniform(rng, o.min_head, o.max_head));
        const std::size_t at = pick_junction(o.junctions);
        b.add_pipe("s" + std::to_string(r + 1), label, junction_label(at), uniform(rng, o.min_length, o.max_length),
                   o.diameters_mm.back(), uniform(rng, o.min_roughness, o.max_roughness));
    }
    b.times(TimeConfig{o.steps, 3600.0, 3600.0});
    return b.build();
}

}  // namespace leakloc
