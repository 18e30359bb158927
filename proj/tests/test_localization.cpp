#include "doctest.h"
#include "leakloc/error.hpp"
#include "leakloc/generators.hpp"
#include "leakloc/graph.hpp"
#include "leakloc/leak_sim.hpp"
#include "leakloc/localization.hpp"
#include "support.hpp"

using namespace leakloc;

namespace {

PressureMatrix table(std::vector<std::size_t> rows, std::size_t steps, std::vector<double> values) {
    std::vector<NodeId> ids;
    for (auto r : rows) ids.push_back(NodeId{r});
    return PressureMatrix(ids, steps, values);
}

std::vector<NodeId> ids(std::initializer_list<std::size_t> indices) {
    std::vector<NodeId> out;
    for (auto i : indices) out.push_back(NodeId{i});
    return out;
}

std::vector<std::vector<double>> rows_of(const PressureMatrix& p) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < p.rows(); ++i) out.emplace_back(p.row(i).begin(), p.row(i).end());
    return out;
}

/// Path a-b-c-d-e with given pipe lengths; the reservoir hangs off `a`.
HydraulicModel weighted_path(const std::vector<double>& lengths) {
    ModelBuilder b;
    const char* names[] = {"a", "b", "c", "d", "e"};
    for (const char* n : names) b.add_junction(n, 0.0, 1.0);
    b.add_reservoir("R", 50.0);
    b.add_pipe("s", "R", "a", 10.0, 150.0, 120.0);
    for (std::size_t i = 0; i + 1 < 5; ++i)
        b.add_pipe("p" + std::to_string(i), names[i], names[i + 1], lengths[i], 100.0, 120.0);
    b.times(TimeConfig{1, 3600.0, 3600.0});
    return b.build();
}

}  // namespace

TEST_CASE("rmse examples") {
    const auto a = table({0, 1}, 2, {1, 2, 3, 4});
    CHECK(rmse(a, a) == 0.0);
    const auto shifted = table({0, 1}, 2, {1.25, 2.25, 3.25, 4.25});
    CHECK(rmse(a, shifted) == doctest::Approx(0.25).epsilon(1e-15));
    const auto b = table({0, 1}, 2, {1, 0, 0, 4});
    CHECK(std::abs(rmse(a, b) - std::sqrt(3.25)) <= 1e-12);
    CHECK(std::abs(rmse(a, b) - 1.80278) < 1e-5);
    CHECK(rmse(a, b) == testing::reference_rmse(rows_of(a), rows_of(b)));
}

TEST_CASE("rmse is a symmetric pseudometric") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(12), y(12), z(12);
        for (auto* v : {&x, &y, &z})
            for (double& e : *v) e = u(rng);
        const auto p = table({1, 4, 6}, 4, x);
        const auto q = table({1, 4, 6}, 4, y);
        const auto r = table({1, 4, 6}, 4, z);
        CHECK(rmse(p, q) >= 0.0);
        CHECK(rmse(p, q) == rmse(q, p));
        CHECK(rmse(p, r) <= rmse(p, q) + rmse(q, r) + 1e-12);
    }
}

TEST_CASE("rmse rejects mismatched shapes and empty input") {
    CHECK_THROWS_AS(rmse(table({0}, 2, {1, 2}), table({1}, 2, {1, 2})), Error);
    CHECK_THROWS_AS(rmse(table({0}, 2, {1, 2}), table({0}, 1, {1})), Error);
    CHECK_THROWS_AS(rmse(table({}, 0, {}), table({}, 0, {})), Error);
}

TEST_CASE("ranking orders by rmse then by index and rejects duplicates") {
    CandidateRanking r({{NodeId{3}, 0.5}, {NodeId{1}, 0.2}, {NodeId{2}, 0.2}, {NodeId{0}, 0.9}});
    CHECK(r.head().node == NodeId{1});
    CHECK(r.rank_of(NodeId{2}) == 2u);
    CHECK(r.rank_of(NodeId{0}) == 4u);
    CHECK_FALSE(r.rank_of(NodeId{9}).has_value());
    CHECK_THROWS_AS(CandidateRanking({{NodeId{1}, 0.1}, {NodeId{1}, 0.2}}), Error);
    CandidateRanking q({{NodeId{7}, 0.42}, {NodeId{8}, 0.5}});
    CHECK(q.head().node == NodeId{7});
}

TEST_CASE("noiseless measurement ranks the true leak first with zero error") {
    const auto model = make_grid(GridOptions{.rows = 4, .cols = 4, .steps = 3});
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const HydraulicSolver solver(model);
    for (const char* leak : {"n0", "n6", "n15"}) {
        const auto full = solver.simulate(add_leak(d, model.id(leak), 6.38), h);
        const auto sensors = ids({1, 9});
        const auto step = localize_once(model, restrict(full, sensors), sensors, d, h, 6.38);
        CHECK(step.selected == model.id(leak));
        CHECK(step.ranking.head().rmse <= 1e-9);
        CHECK(step.ranking.size() == model.junction_count());
    }
}

TEST_CASE("ranking on a path matches a brute-force recomputation") {
    const auto model = testing::path_network(5);
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    // The reservoir feeds j0; the sensor sits at the other end, j4. Every
    // candidate on this line shifts j4 by a different amount.
    const NodeId truth = model.id("j0");
    const NodeId sensor = model.id("j4");
    const std::vector<NodeId> sensors{sensor};
    const auto measured = restrict(simulate(model, add_leak(d, truth, 6.38), h), sensors);
    const auto ranking = rank_candidates(model, measured, sensors, d, h, 6.38);
    CHECK(ranking.head().node == truth);

    // Independent pass: simulate each candidate and score with the reference RMSE.
    std::vector<std::pair<double, std::size_t>> brute;
    for (std::size_t m = 0; m < 5; ++m) {
        const auto sim = restrict(simulate(model, add_leak(d, NodeId{m}, 6.38), h), sensors);
        brute.emplace_back(testing::reference_rmse(rows_of(measured), rows_of(sim)), m);
    }
    std::sort(brute.begin(), brute.end());
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(ranking.entries()[i].node == NodeId{brute[i].second});
        CHECK(ranking.entries()[i].rmse == doctest::Approx(brute[i].first).epsilon(1e-12));
    }
}

TEST_CASE("noisy ranking is a permutation of all junctions") {
    const auto model = make_grid(GridOptions{.rows = 4, .cols = 4, .steps = 3});
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const auto full = noised_measurement(model, d, h, GroundTruth{model.id("n5"), 6.38, NoiseSpec{0.1, 3}});
    const auto sensors = ids({2, 12});
    const auto ranking = rank_candidates(model, restrict(full, sensors), sensors, d, h, 6.38);
    REQUIRE(ranking.size() == 16);
    std::vector<NodeId> seen;
    for (const auto& c : ranking.entries()) seen.push_back(c.node);
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < 16; ++i) CHECK(seen[i] == NodeId{i});
    CHECK(ranking.rank_of(model.id("n5")).value() >= 1);
}

TEST_CASE("equal errors go to the lowest index") {
    // R feeds j0, which splits symmetrically to j1 and j2. A sensor at j0
    // cannot tell the two branches apart.
    ModelBuilder b;
    b.add_junction("j0", 0.0, 1.0).add_junction("j1", 0.0, 1.0).add_junction("j2", 0.0, 1.0).add_reservoir("R", 50.0);
    b.add_pipe("s", "R", "j0", 100.0, 150.0, 120.0);
    b.add_pipe("a", "j0", "j1", 100.0, 100.0, 120.0).add_pipe("b", "j0", "j2", 100.0, 100.0, 120.0);
    b.times(TimeConfig{1, 3600.0, 3600.0});
    const auto model = b.build();
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const std::vector<NodeId> sensors{NodeId{0}};
    const auto measured = restrict(simulate(model, add_leak(d, NodeId{2}, 6.38), h), sensors);
    const auto ranking = rank_candidates(model, measured, sensors, d, h, 6.38);
    // The mirrored branches agree up to rounding, and the order is reproducible.
    const auto r1 = ranking.rank_of(NodeId{1}).value();
    const auto r2 = ranking.rank_of(NodeId{2}).value();
    CHECK(std::abs(ranking.entries()[r1 - 1].rmse - ranking.entries()[r2 - 1].rmse) <= 1e-12);
    CHECK(rank_candidates(model, measured, sensors, d, h, 6.38, {}, 4) == ranking);

    // A reservoir row reads 0 under every candidate: an exact tie everywhere,
    // so the order is the dense index order.
    const std::vector<NodeId> reservoir{model.id("R")};
    const auto flat = restrict(simulate(model, add_leak(d, NodeId{2}, 6.38), h), reservoir);
    const auto tied = rank_candidates(model, flat, reservoir, d, h, 6.38);
    REQUIRE(tied.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(tied.entries()[i].node == NodeId{i});
        CHECK(tied.entries()[i].rmse == 0.0);
    }
}

TEST_CASE("measured rows must match the sensors") {
    const auto model = testing::path_network(3);
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const auto full = simulate(model, d, h);
    const std::vector<NodeId> sensors{NodeId{0}, NodeId{1}};
    const std::vector<NodeId> other{NodeId{2}};
    CHECK_THROWS_AS(rank_candidates(model, restrict(full, other), sensors, d, h, 6.38), Error);
    CHECK_THROWS_AS(rank_candidates(model, restrict(full, sensors), sensors, d, h, 0.0), Error);
}

TEST_CASE("sensor configuration invariants") {
    CHECK_NOTHROW(SensorConfig(ids({1, 2}), NodeId{3}, ids({1, 2, 3, 4})));
    CHECK_THROWS_AS(SensorConfig(ids({1, 2}), NodeId{2}, ids({1, 2, 3})), Error);  // mobile on a stationary node
    CHECK_THROWS_AS(SensorConfig(ids({1}), NodeId{5}, ids({1, 2, 3})), Error);     // mobile not allowed
    CHECK_THROWS_AS(SensorConfig(ids({9}), NodeId{1}, ids({1, 2, 3})), Error);     // stationary not allowed
    const SensorConfig c(ids({4, 1}), NodeId{2}, ids({4, 3, 2, 1}));
    CHECK(c.sensors() == ids({1, 2, 4}));
    CHECK(c.is_occupied(NodeId{2}));
    CHECK_FALSE(c.is_occupied(NodeId{3}));
}

TEST_CASE("mobile sensor moves onto a free selected node") {
    const auto model = weighted_path({100, 150, 100, 100});
    const DistanceOracle oracle(model);
    const SensorConfig c(ids({0}), NodeId{4}, ids({0, 1, 2, 3, 4}));
    const auto moved = shift_mobile(c, NodeId{2}, oracle);
    CHECK(moved.shifted);
    CHECK(moved.config.mobile() == NodeId{2});
    CHECK(moved.config.stationary() == ids({0}));
    CHECK(moved.config.history() == ids({4}));
}

TEST_CASE("an occupied selection sends the mobile sensor to the closest free node") {
    // a -100- b -250- c: selected b holds a stationary sensor; a is 100 m away, c 250 m.
    ModelBuilder builder;
    builder.add_junction("a", 0, 1).add_junction("b", 0, 1).add_junction("c", 0, 1).add_junction("d", 0, 1);
    builder.add_reservoir("R", 50.0);
    builder.add_pipe("s", "R", "d", 10, 100, 120);
    builder.add_pipe("p1", "a", "b", 100, 100, 120).add_pipe("p2", "b", "c", 250, 100, 120);
    builder.add_pipe("p3", "c", "d", 500, 100, 120);
    const auto model = builder.build();
    const DistanceOracle oracle(model);
    const SensorConfig c(ids({1}), NodeId{3}, ids({0, 1, 2, 3}));
    const auto moved = shift_mobile(c, NodeId{1}, oracle);
    CHECK(moved.shifted);
    CHECK(moved.config.mobile() == NodeId{0});

    // Equidistant free nodes: the lower index wins.
    const auto sym = weighted_path({100, 100, 100, 100});
    const SensorConfig s(ids({2}), NodeId{0}, ids({0, 1, 2, 3, 4}));
    CHECK(shift_mobile(s, NodeId{2}, DistanceOracle(sym)).config.mobile() == NodeId{1});
}

TEST_CASE("no free allowed node leaves the configuration unchanged") {
    const auto model = weighted_path({100, 100, 100, 100});
    const SensorConfig c(ids({0, 1}), NodeId{2}, ids({0, 1, 2}));
    const auto moved = shift_mobile(c, NodeId{1}, DistanceOracle(model));
    CHECK_FALSE(moved.shifted);
    CHECK(moved.config == c);
}

TEST_CASE("a single iteration equals localize_once") {
    const auto model = make_grid(GridOptions{.rows = 4, .cols = 4, .steps = 3});
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const auto full = noised_measurement(model, d, h, GroundTruth{model.id("n9"), 6.38, NoiseSpec{0.1, 8}});
    const auto allowed = model.junction_ids();
    const SensorConfig initial(ids({3}), NodeId{12}, allowed);
    const auto result = iterative_localize(model, MeasurementSource(full), initial, d, h, 6.38, 1);
    REQUIRE(result.iterations.size() == 1);
    const auto sensors = initial.sensors();
    const auto once = localize_once(model, restrict(full, sensors), sensors, d, h, 6.38);
    CHECK(result.final_node == once.selected);
    CHECK(result.iterations[0].ranking == once.ranking);
    CHECK_FALSE(result.iterations[0].shifted);
}

TEST_CASE("noiseless iteration does not move away from the leak") {
    const auto model = make_grid(GridOptions{.steps = 4});
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    for (const char* leak : {"n27", "n63", "n99"}) {
        const auto full = simulate(model, add_leak(d, model.id(leak), 6.38), h);
        const SensorConfig initial({}, model.id("n0"), model.junction_ids());
        const auto result = iterative_localize(model, MeasurementSource(full), initial, d, h, 6.38, 2);
        const DistanceOracle oracle(model);
        const double first = oracle.distance(result.iterations[0].selected, model.id(leak));
        const double second = oracle.distance(result.iterations[1].selected, model.id(leak));
        CHECK(second <= first);
    }
}

TEST_CASE("with nothing free, later iterations repeat the first") {
    const auto model = make_grid(GridOptions{.rows = 3, .cols = 3, .steps = 2});
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const auto full = noised_measurement(model, d, h, GroundTruth{model.id("n4"), 6.38, NoiseSpec{0.1, 2}});
    const SensorConfig initial(ids({0, 8}), NodeId{2}, ids({0, 2, 8}));
    const auto result = iterative_localize(model, MeasurementSource(full), initial, d, h, 6.38, 3);
    REQUIRE(result.iterations.size() == 3);
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK_FALSE(result.iterations[i].shifted);
        CHECK(result.iterations[i].sensors == initial);
        CHECK(result.iterations[i].ranking == result.iterations[0].ranking);
    }
}

TEST_CASE("missing recording is reported by label before any solving") {
    const auto model = make_grid(GridOptions{.rows = 3, .cols = 3, .steps = 2});
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const auto full = simulate(model, d, h);
    const auto partial = restrict(full, ids({0, 1, 2}));
    const SensorConfig initial(ids({0}), NodeId{1}, ids({0, 1, 2, 5}));
    CHECK_THROWS_WITH_AS(iterative_localize(model, MeasurementSource(partial), initial, d, h, 6.38, 2),
                         doctest::Contains("'n5'"), Error);
}

TEST_CASE("failed candidate simulations rank last") {
    // A loop of mismatched pipes: candidates differ in how many solver
    // iterations they need, so some budget lets only part of them converge.
    ModelBuilder b;
    b.add_junction("j0", 0, 0).add_junction("j1", 0, 0).add_junction("j2", 0, 0).add_junction("j3", 0, 0);
    b.add_reservoir("R", 50);
    b.add_pipe("s", "R", "j0", 10, 300, 120).add_pipe("a", "j0", "j1", 100, 300, 120);
    b.add_pipe("b", "j1", "j2", 2000, 20, 120).add_pipe("c", "j0", "j3", 10, 300, 120);
    b.add_pipe("e", "j3", "j2", 50, 25, 80);
    b.times(TimeConfig{1, 3600, 3600});
    const auto model = b.build();
    const auto d = demand_matrix(model);
    const auto h = head_schedule(model);
    const auto observed = model.junction_ids();
    const auto measured = restrict(simulate(model, d, h), observed);
    bool separated = false;
    for (std::size_t budget = 1; budget <= 30 && !separated; ++budget) {
        SolverSettings settings;
        settings.max_iterations = budget;
        const HydraulicSolver solver(model, settings);
        const auto bank = SensitivityBank::build(solver, d, h, 6.38, observed);
        std::size_t failed = 0;
        for (NodeId m : observed)
            if (!bank.pressures(m)) {
                ++failed;
                CHECK_FALSE(bank.failure(m).empty());
            }
        if (failed == 0 || failed == observed.size()) {
            if (failed == observed.size()) CHECK_THROWS_AS(bank.rank(measured), SolverError);
            continue;
        }
        separated = true;
        const auto ranking = bank.rank(measured);
        for (std::size_t k = 0; k < ranking.size(); ++k) {
            const auto& c = ranking.entries()[k];
            CHECK(c.failed == !bank.pressures(c.node).has_value());
            if (c.failed) {
                CHECK(std::isinf(c.rmse));
                CHECK(k >= observed.size() - failed);
            }
        }
    }
    CHECK(separated);
}
