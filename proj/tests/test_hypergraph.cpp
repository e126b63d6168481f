#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "protohat/errors.hpp"
#include "protohat/hypergraph.hpp"
#include "protohat/rng.hpp"

using namespace protohat;

namespace {

Hypergraph two_edge_line() {
    Hypergraph g;
    g.n_nodes = 3;
    g.hyperedges = {{0, 1}, {1, 2}};
    g.types.type_names = {"a", "b"};
    g.types.node_type = {0, 1, 0};
    return g;
}

Hypergraph random_graph(uint64_t seed, int n, int m) {
    Rng rng(seed);
    Hypergraph g;
    g.n_nodes = n;
    g.types.type_names = {"a", "b"};
    for (int v = 0; v < n; ++v) g.types.node_type.push_back(rng.uniform_int(2));
    for (int e = 0; e < m; ++e) {
        std::vector<int> pool(static_cast<size_t>(n));
        for (int v = 0; v < n; ++v) pool[static_cast<size_t>(v)] = v;
        rng.shuffle(pool);
        const int size = 2 + rng.uniform_int(std::min(5, n - 1));
        g.hyperedges.emplace_back(pool.begin(), pool.begin() + size);
    }
    return g;
}

}  // namespace

TEST_CASE("build_incidence on the two-edge example") {
    const IncidenceMatrix inc = build_incidence(two_edge_line());
    CHECK(inc.I == Matrix::from_rows({{1, 0}, {1, 1}, {0, 1}}));
    CHECK(inc.degree == std::vector<int>{2, 2});
}

TEST_CASE("single hyperedge covering every node") {
    Hypergraph g;
    g.n_nodes = 3;
    g.hyperedges = {{0, 1, 2}};
    g.types.type_names = {"a", "b"};
    g.types.node_type = {0, 1, 0};
    const IncidenceMatrix inc = build_incidence(g);
    CHECK(inc.I == Matrix::from_rows({{1}, {1}, {1}}));
    CHECK(inc.degree == std::vector<int>{3});
}

TEST_CASE("row sums of I match a membership-loop count on random graphs") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        const Hypergraph g = random_graph(seed, 50, 20);
        const IncidenceMatrix inc = build_incidence(g);
        for (int v = 0; v < g.n_nodes; ++v) {
            int expected = 0;
            for (const auto& edge : g.hyperedges)
                expected += std::count(edge.begin(), edge.end(), v) > 0 ? 1 : 0;
            double row_sum = 0.0;
            for (int e = 0; e < inc.n_edges(); ++e) row_sum += inc.I(v, e);
            CHECK(row_sum == static_cast<double>(expected));
        }
    }
}

TEST_CASE("incident_hyperedges") {
    const IncidenceMatrix inc = build_incidence(two_edge_line());
    CHECK(incident_hyperedges(inc, 1) == std::vector<int>{0, 1});
    CHECK_THROWS_AS(incident_hyperedges(inc, 3), DimensionError);

    // isolated node: empty set
    Hypergraph g = two_edge_line();
    g.n_nodes = 4;
    g.types.node_type.push_back(1);
    const IncidenceMatrix inc2 = build_incidence(g);
    CHECK(incident_hyperedges(inc2, 3).empty());

    // random graph vs loop oracle
    const Hypergraph rg = random_graph(7, 30, 12);
    const IncidenceMatrix rinc = build_incidence(rg);
    for (int v = 0; v < rg.n_nodes; ++v) {
        std::vector<int> expected;
        for (size_t e = 0; e < rg.hyperedges.size(); ++e)
            if (std::count(rg.hyperedges[e].begin(), rg.hyperedges[e].end(), v))
                expected.push_back(static_cast<int>(e));
        CHECK(incident_hyperedges(rinc, v) == expected);
    }
}

TEST_CASE("validate rules") {
    CHECK(validate(two_edge_line()).ok());

    Hypergraph singleton = two_edge_line();
    singleton.hyperedges = {{1}};
    const auto report = validate(singleton);
    CHECK_FALSE(report.ok());
    CHECK(report.errors.front().find("hyperedge 0 has <2 nodes") != std::string::npos);

    Hypergraph out_of_range = two_edge_line();
    out_of_range.hyperedges.push_back({0, 3});
    const auto report2 = validate(out_of_range);
    CHECK_FALSE(report2.ok());
    CHECK(report2.errors.front().find("out-of-range") != std::string::npos);

    Hypergraph duplicated = two_edge_line();
    duplicated.hyperedges = {{0, 0, 1}};
    CHECK_FALSE(validate(duplicated).ok());

    Hypergraph homogeneous = two_edge_line();
    homogeneous.types.type_names = {"only"};
    homogeneous.types.node_type = {0, 0, 0};
    CHECK_FALSE(validate(homogeneous).ok());

    // isolated nodes warn but do not fail
    Hypergraph isolated = two_edge_line();
    isolated.n_nodes = 4;
    isolated.types.node_type.push_back(0);
    const auto report3 = validate(isolated);
    CHECK(report3.ok());
    REQUIRE(report3.warnings.size() == 1);
    CHECK(report3.warnings.front().find("node 3") != std::string::npos);
}

TEST_CASE("build_incidence rejects empty or invalid graphs") {
    Hypergraph empty = two_edge_line();
    empty.hyperedges.clear();
    CHECK_THROWS_AS(build_incidence(empty), StructuralError);

    Hypergraph bad = two_edge_line();
    bad.hyperedges = {{0}};
    CHECK_THROWS_AS(build_incidence(bad), StructuralError);
}

TEST_CASE("round trip: memberships reconstruct the hyperedge list") {
    const Hypergraph g = random_graph(21, 40, 15);
    const IncidenceMatrix inc = build_incidence(g);
    CHECK(inc.members == g.hyperedges);
    // reading memberships back from I (sorted) matches the sorted edge lists
    for (int e = 0; e < inc.n_edges(); ++e) {
        std::vector<int> from_i;
        for (int v = 0; v < inc.n_nodes(); ++v)
            if (inc.I(v, e) == 1.0) from_i.push_back(v);
        std::vector<int> expected = g.hyperedges[static_cast<size_t>(e)];
        std::sort(expected.begin(), expected.end());
        CHECK(from_i == expected);
        CHECK(inc.degree[static_cast<size_t>(e)] >= 2);
    }
}

TEST_CASE("permuting node indices permutes I rows and keeps degrees") {
    const Hypergraph g = random_graph(33, 25, 10);
    Rng rng(5);
    std::vector<int> perm(static_cast<size_t>(g.n_nodes));
    for (int v = 0; v < g.n_nodes; ++v) perm[static_cast<size_t>(v)] = v;
    rng.shuffle(perm);

    Hypergraph pg;
    pg.n_nodes = g.n_nodes;
    pg.types.type_names = g.types.type_names;
    pg.types.node_type.assign(static_cast<size_t>(g.n_nodes), 0);
    for (int v = 0; v < g.n_nodes; ++v)
        pg.types.node_type[static_cast<size_t>(perm[static_cast<size_t>(v)])] =
            g.types.node_type[static_cast<size_t>(v)];
    for (const auto& edge : g.hyperedges) {
        std::vector<int> mapped;
        for (int v : edge) mapped.push_back(perm[static_cast<size_t>(v)]);
        pg.hyperedges.push_back(std::move(mapped));
    }

    const IncidenceMatrix inc = build_incidence(g);
    const IncidenceMatrix pinc = build_incidence(pg);
    CHECK(pinc.degree == inc.degree);
    for (int v = 0; v < g.n_nodes; ++v)
        for (int e = 0; e < inc.n_edges(); ++e)
            CHECK(pinc.I(perm[static_cast<size_t>(v)], e) == inc.I(v, e));
}
