#include <random>

#include "doctest.h"
#include "leakloc/error.hpp"
#include "leakloc/network.hpp"
#include "leakloc/text.hpp"
#include "support.hpp"

using namespace leakloc;

namespace {

PressureMatrix numbered(std::size_t rows, std::size_t steps) {
    std::vector<NodeId> ids(rows);
    std::vector<double> values(rows * steps);
    for (std::size_t i = 0; i < rows; ++i) ids[i] = NodeId{i};
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = static_cast<double>(k) * 0.5 - 3.0;
    return PressureMatrix(ids, steps, values);
}

}  // namespace

TEST_CASE("numbers parse and print without locale effects") {
    CHECK(parse_double("1.5", 1) == 1.5);
    CHECK(parse_double("+2e3", 1) == 2000.0);
    CHECK(parse_double("-0.25", 1) == -0.25);
    CHECK_THROWS_AS(parse_double("1,5", 7), ParseError);
    CHECK_THROWS_AS(parse_double("", 7), ParseError);
    CHECK_THROWS_WITH_AS(parse_double("abc", 12, "elevation"), "line 12: malformed number 'abc' for elevation",
                         ParseError);
    for (double v : {0.1, 1.0 / 3.0, 6.38, -1e-300, 123456789.123}) CHECK(parse_double(format_double(v), 0) == v);
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("string helpers") {
    CHECK(split_whitespace("  a \tb\r\n c ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(trim("  x y \t") == "x y");
    CHECK(to_upper("Junctions") == "JUNCTIONS");
    CHECK(is_valid_label("n17"));
    CHECK_FALSE(is_valid_label("a b"));
    CHECK_FALSE(is_valid_label("a;b"));
    CHECK_FALSE(is_valid_label(""));
}

TEST_CASE("model construction validates references and labels") {
    ModelBuilder b;
    b.add_junction("J1", 0.0, 1.0).add_reservoir("R1", 50.0).add_pipe("P1", "R1", "nodeX", 100.0, 100.0, 120.0);
    CHECK_THROWS_WITH_AS(b.build(), doctest::Contains("nodeX"), Error);

    ModelBuilder dup;
    dup.add_junction("A", 0.0, 1.0).add_junction("A", 0.0, 1.0).add_reservoir("R", 10.0).add_pipe("p", "R", "A", 1.0,
                                                                                                   100.0, 100.0);
    CHECK_THROWS_AS(dup.build(), Error);

    ModelBuilder bad_length;
    bad_length.add_junction("A", 0.0, 1.0).add_reservoir("R", 10.0).add_pipe("p", "R", "A", -1.0, 100.0, 100.0);
    CHECK_THROWS_AS(bad_length.build(), Error);
}

TEST_CASE("dense indices put junctions before reservoirs") {
    const auto model = testing::single_pipe(10.0);
    CHECK(model.node_count() == 2);
    CHECK(model.id("J") == NodeId{0});
    CHECK(model.id("R") == NodeId{1});
    CHECK(model.is_junction(NodeId{0}));
    CHECK(model.is_reservoir(NodeId{1}));
    CHECK(model.label(NodeId{1}) == "R");
    CHECK_FALSE(model.find("Q").has_value());
    CHECK_THROWS_WITH_AS(model.id("Q"), doctest::Contains("'Q'"), Error);
}

TEST_CASE("connectivity check names the isolated junction") {
    ModelBuilder b;
    b.add_junction("A", 0.0, 1.0).add_junction("B", 0.0, 1.0).add_reservoir("R", 10.0);
    b.add_pipe("p1", "R", "A", 10.0, 100.0, 100.0).add_pipe("p2", "A", "B", 10.0, 100.0, 100.0, PipeStatus::closed);
    const auto model = b.build();
    REQUIRE(model.first_unreachable_junction().has_value());
    CHECK(model.label(*model.first_unreachable_junction()) == "B");
    CHECK_THROWS_WITH_AS(model.require_solvable(), doctest::Contains("'B'"), Error);
}

TEST_CASE("demand matrix follows base demand and patterns") {
    ModelBuilder b;
    b.add_pattern("pat", {0.5, 1.5});
    b.add_junction("A", 0.0, 2.0, "pat").add_junction("B", 0.0, 3.0).add_reservoir("R", 10.0);
    b.add_pipe("p1", "R", "A", 10.0, 100.0, 100.0).add_pipe("p2", "A", "B", 10.0, 100.0, 100.0);
    b.times(TimeConfig{3, 3600.0, 3600.0});
    const auto model = b.build();
    const auto d = demand_matrix(model);
    CHECK(d.rows() == 3);
    CHECK(d.steps() == 3);
    CHECK(d.at(NodeId{0}, 0) == 1.0);
    CHECK(d.at(NodeId{0}, 1) == 3.0);
    CHECK(d.at(NodeId{0}, 2) == 1.0);  // patterns wrap around
    CHECK(d.at(NodeId{1}, 2) == 3.0);
    CHECK(d.at(NodeId{2}, 1) == 0.0);
    DemandMatrix copy = d;
    CHECK_THROWS_AS(copy.set(NodeId{2}, 0, 1.0), Error);
}

TEST_CASE("restrict keeps the selected rows in dense order") {
    const auto p = numbered(3, 4);
    const std::vector<NodeId> all{NodeId{2}, NodeId{0}, NodeId{1}};
    CHECK(restrict(p, all) == p);

    const std::vector<NodeId> only_b{NodeId{1}};
    const auto b = restrict(p, only_b);
    CHECK(b.rows() == 1);
    CHECK(b.steps() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(b.at(0, t) == p.at(1, t));

    const std::vector<NodeId> missing{NodeId{7}};
    CHECK_THROWS_AS(restrict(p, missing), Error);
}

TEST_CASE("restrict on a large matrix matches a row-by-row copy") {
    const auto p = numbered(782, 5);
    std::mt19937_64 rng(3);
    std::vector<NodeId> pool(782);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = NodeId{i};
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<NodeId> sensors(pool.begin(), pool.begin() + 33);

    const auto r = restrict(p, sensors);
    REQUIRE(r.rows() == 33);
    std::vector<NodeId> sorted = sensors;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        CHECK(r.row_ids()[i] == sorted[i]);
        for (std::size_t t = 0; t < 5; ++t) CHECK(r.at(i, t) == p.at(sorted[i].index, t));
    }
    // Restricting twice equals restricting once to the inner set.
    const std::vector<NodeId> inner(sorted.begin(), sorted.begin() + 10);
    CHECK(restrict(r, inner) == restrict(p, inner));
}

TEST_CASE("add_leak adds the leak to one junction row at every step") {
    DemandMatrix d(2, 1, 2);
    d.set(NodeId{0}, 0, 1.0);
    d.set(NodeId{0}, 1, 2.0);
    d.set(NodeId{1}, 0, 4.0);
    CHECK(add_leak(d, NodeId{0}, 0.0) == d);
    const auto leaked = add_leak(d, NodeId{0}, 6.38);
    CHECK(leaked.at(NodeId{0}, 0) == doctest::Approx(7.38).epsilon(1e-15));
    CHECK(leaked.at(NodeId{0}, 1) == doctest::Approx(8.38).epsilon(1e-15));
    CHECK(leaked.at(NodeId{1}, 0) == 4.0);
    CHECK(leaked.at(NodeId{1}, 1) == 0.0);
    CHECK_THROWS_AS(add_leak(d, NodeId{2}, 1.0), Error);
    CHECK_THROWS_AS(add_leak(d, NodeId{0}, -1.0), Error);
}

TEST_CASE("add_leak raises every column sum by exactly the leak") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    DemandMatrix d(5, 1, 3);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t t = 0; t < 3; ++t) d.set(NodeId{i}, t, u(rng));
    for (std::size_t m = 0; m < 5; ++m) {
        const auto leaked = add_leak(d, NodeId{m}, 6.38);
        for (std::size_t t = 0; t < 3; ++t) {
            double before = 0.0;
            double after = 0.0;
            for (std::size_t i = 0; i < 6; ++i) {
                before += d.at(NodeId{i}, t);
                after += leaked.at(NodeId{i}, t);
            }
            CHECK(after - before == doctest::Approx(6.38).epsilon(1e-12));
        }
    }
    // Leaks at two nodes commute.
    CHECK(add_leak(add_leak(d, NodeId{1}, 2.0), NodeId{3}, 1.0) == add_leak(add_leak(d, NodeId{3}, 1.0), NodeId{1}, 2.0));
}

TEST_CASE("head schedule broadcasts a single step") {
    const auto h = HeadSchedule::constant({50.0, 40.0});
    CHECK(h.steps() == 1);
    CHECK(h.head(1, 17) == 40.0);
    HeadSchedule two(1, 2, {1.0, 2.0});
    CHECK(two.head(0, 1) == 2.0);
}
