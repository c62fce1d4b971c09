#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "poirec/common.hpp"
#include "poirec/flowmap.hpp"
#include "poirec/popularity.hpp"

using namespace poirec;

namespace {

CheckIn ci(std::int64_t user, std::int64_t poi, std::int64_t time) {
    CheckIn c;
    c.user = user;
    c.poi = poi;
    c.time = time;
    return c;
}

Trajectory traj(std::int64_t user, std::vector<std::int64_t> pois, std::int64_t start = 0) {
    Trajectory t;
    t.user = user;
    std::int64_t when = start;
    for (std::int64_t p : pois) {
        t.checkins.push_back(ci(user, p, when));
        when += 60;
    }
    return t;
}

// Vocabulary of n venues, category i % n_cats, coordinates spread on a line.
IdMaps vocab(std::int64_t n, std::int64_t n_cats = 2) {
    IdMaps maps;
    for (std::int64_t i = 0; i < n; ++i) {
        maps.poi_ids.push_back("p" + std::to_string(i));
        maps.poi_index["p" + std::to_string(i)] = i;
        maps.poi_meta.push_back({i % n_cats, 40.0 + 0.01 * static_cast<double>(i),
                                 -74.0 - 0.01 * static_cast<double>(i)});
    }
    for (std::int64_t c = 0; c < n_cats; ++c) {
        maps.category_ids.push_back("c" + std::to_string(c));
        maps.category_names.push_back("cat" + std::to_string(c));
        maps.category_index["c" + std::to_string(c)] = c;
    }
    return maps;
}

PopularityTable table_for(const std::vector<Trajectory>& train, const IdMaps& maps) {
    PopularityParams params;
    params.reference_time = max_train_time(train);
    return popularity_table(train, maps, params);
}

}  // namespace

TEST_SUITE("flow map construction") {
    TEST_CASE("edges count consecutive visits, including back-to-back repeats") {
        IdMaps maps = vocab(4);
        std::vector<Trajectory> train{traj(0, {0, 1, 1, 2}), traj(1, {0, 1})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        CHECK(fm.n_nodes == 4);
        REQUIRE(fm.edges.size() == 3);
        CHECK(fm.edges.at({0, 1}) == 2);
        CHECK(fm.edges.at({1, 1}) == 1);
        CHECK(fm.edges.at({1, 2}) == 1);
        // One edge per consecutive pair: (4-1) + (2-1).
        CHECK(fm.total_edge_weight() == 4);
    }

    TEST_CASE("no transitions cross trajectory boundaries") {
        IdMaps maps = vocab(3);
        std::vector<Trajectory> train{traj(0, {0, 1}), traj(0, {2, 0})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        CHECK(fm.edges.count({1, 2}) == 0);
        CHECK(fm.edges.at({0, 1}) == 1);
        CHECK(fm.edges.at({2, 0}) == 1);
    }

    TEST_CASE("vocabulary venues missing from train become isolated zero rows") {
        IdMaps maps = vocab(4);
        std::vector<Trajectory> train{traj(0, {0, 1, 2})};  // venue 3 unseen
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        REQUIRE(fm.node_attrs.size() == 4);
        CHECK(fm.node_attrs[3].popularity == 0.0);
        CHECK(fm.node_attrs[3].freq_norm == 0.0);
        for (const auto& [edge, w] : fm.edges) {
            (void)w;
            CHECK(edge.first != 3);
            CHECK(edge.second != 3);
        }
        // Metadata still flows through for the isolated node.
        CHECK(fm.node_attrs[3].lat == doctest::Approx(40.03));
    }

    TEST_CASE("node attributes mirror the popularity table and venue metadata") {
        IdMaps maps = vocab(3);
        std::vector<Trajectory> train{traj(0, {0, 1, 1, 1, 2, 0})};
        PopularityTable pop = table_for(train, maps);
        FlowMap fm = build_flow_map(train, maps, pop);
        for (std::int64_t p = 0; p < 3; ++p) {
            CHECK(fm.node_attrs[static_cast<std::size_t>(p)].popularity ==
                  doctest::Approx(pop.normalized_for(p)).epsilon(1e-15));
            CHECK(fm.node_attrs[static_cast<std::size_t>(p)].category == maps.poi_meta[static_cast<std::size_t>(p)].category);
        }
        // freq 2, 3, 1 -> log1p min-max puts venue 2 at 0 and venue 1 at 1.
        CHECK(fm.node_attrs[2].freq_norm == 0.0);
        CHECK(fm.node_attrs[1].freq_norm == 1.0);
        const double mid = (std::log1p(2.0) - std::log1p(1.0)) / (std::log1p(3.0) - std::log1p(1.0));
        CHECK(fm.node_attrs[0].freq_norm == doctest::Approx(mid).epsilon(1e-12));
    }

    TEST_CASE("empty train split is a data error") {
        IdMaps maps = vocab(2);
        PopularityTable pop;
        CHECK_THROWS_AS(build_flow_map({}, maps, pop), DataError);
    }
}

TEST_SUITE("feature matrix") {
    TEST_CASE("column layout: popularity, coordinates, one-hot category") {
        IdMaps maps = vocab(3, 3);
        std::vector<Trajectory> train{traj(0, {0, 1, 2})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        FeatureMatrix f = feature_matrix(fm, 3);
        CHECK(f.values.rows() == 3);
        CHECK(f.values.cols() == 6);  // 3 base + 3 categories
        CHECK(f.column_names ==
              std::vector<std::string>{"popularity", "lat_norm", "lon_norm", "category_0",
                                       "category_1", "category_2"});
        for (std::int64_t p = 0; p < 3; ++p) {
            // Exactly one hot category bit per row, at the node's category.
            double hot = 0.0;
            for (std::int64_t c = 0; c < 3; ++c) hot += f.values.at(p, 3 + c);
            CHECK(hot == 1.0);
            CHECK(f.values.at(p, 3 + fm.node_attrs[static_cast<std::size_t>(p)].category) == 1.0);
        }
        // Coordinates are min-max normalized over the vocabulary.
        CHECK(f.values.at(0, 1) == 0.0);
        CHECK(f.values.at(2, 1) == 1.0);
        CHECK(f.values.at(0, 2) == 1.0);  // longitudes decrease with the index
        CHECK(f.values.at(2, 2) == 0.0);
    }

    TEST_CASE("the frequency column appears on request") {
        IdMaps maps = vocab(2);
        std::vector<Trajectory> train{traj(0, {0, 1, 1})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        FeatureMatrix f = feature_matrix(fm, 2, true);
        CHECK(f.values.cols() == 6);  // 4 base + 2 categories
        CHECK(f.column_names[1] == "freq_norm");
        CHECK(f.includes_freq);
        CHECK(f.values.at(0, 1) == fm.node_attrs[0].freq_norm);
    }

    TEST_CASE("category indices outside the declared range break the shape contract") {
        IdMaps maps = vocab(3, 3);
        std::vector<Trajectory> train{traj(0, {0, 1, 2})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        CHECK_THROWS_AS(feature_matrix(fm, 2), ShapeError);
    }

    TEST_CASE("all features stay inside the unit interval") {
        IdMaps maps = vocab(5, 2);
        std::vector<Trajectory> train{traj(0, {0, 1, 2, 3, 4, 0, 2}), traj(1, {4, 3, 2})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        FeatureMatrix f = feature_matrix(fm, 2, true);
        for (std::int64_t i = 0; i < f.values.numel(); ++i) {
            CHECK(f.values[i] >= 0.0);
            CHECK(f.values[i] <= 1.0);
        }
    }
}

TEST_SUITE("normalized adjacency") {
    TEST_CASE("two nodes with one edge normalize to a quarter everywhere") {
        IdMaps maps = vocab(2);
        std::vector<Trajectory> train{traj(0, {0, 1})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        NormalizedAdjacency adj = normalized_adjacency(fm);
        // symmetrized [[0,1],[1,0]] plus unit self-loops -> degrees (2,2)
        // -> every entry 1/sqrt(2)/sqrt(2) = 0.5.
        for (std::int64_t i = 0; i < 4; ++i) CHECK(adj.values[i] == doctest::Approx(0.5).epsilon(1e-15));
    }

    TEST_CASE("output is symmetric even though the flow map is directed") {
        IdMaps maps = vocab(4);
        std::vector<Trajectory> train{traj(0, {0, 1, 2, 3, 1, 0, 2})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        NormalizedAdjacency adj = normalized_adjacency(fm);
        for (std::int64_t i = 0; i < 4; ++i) {
            for (std::int64_t j = 0; j < 4; ++j) {
                CHECK(adj.values.at(i, j) == doctest::Approx(adj.values.at(j, i)).epsilon(1e-15));
            }
        }
    }

    TEST_CASE("spectral radius never exceeds one") {
        // Holds for D^{-1/2} M D^{-1/2} with M nonnegative and D its row sums.
        Rng rng(13);
        for (int round = 0; round < 10; ++round) {
            const std::int64_t n = 3 + static_cast<std::int64_t>(rng.bounded(6));
            IdMaps maps = vocab(n);
            std::vector<std::int64_t> walk;
            for (int s = 0; s < 30; ++s) walk.push_back(static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(n))));
            std::vector<Trajectory> train{traj(0, walk)};
            FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
            NormalizedAdjacency adj = normalized_adjacency(fm);
            CHECK(testsupport::oracle_spectral_radius(adj.values) <= 1.0 + 1e-9);
        }
    }

    TEST_CASE("an isolated node keeps a unit diagonal entry") {
        IdMaps maps = vocab(3);
        std::vector<Trajectory> train{traj(0, {0, 1})};  // venue 2 isolated
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        NormalizedAdjacency adj = normalized_adjacency(fm);
        CHECK(adj.values.at(2, 2) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(adj.values.at(2, 0) == 0.0);
        CHECK(adj.values.at(0, 2) == 0.0);
    }

    TEST_CASE("heavier self-loop weight shifts mass to the diagonal") {
        IdMaps maps = vocab(2);
        std::vector<Trajectory> train{traj(0, {0, 1})};
        FlowMap fm = build_flow_map(train, maps, table_for(train, maps));
        NormalizedAdjacency light = normalized_adjacency(fm, 1.0);
        NormalizedAdjacency heavy = normalized_adjacency(fm, 3.0);
        CHECK(heavy.values.at(0, 0) > light.values.at(0, 0));
        CHECK(heavy.values.at(0, 1) < light.values.at(0, 1));
    }
}

TEST_SUITE("rebuild determinism") {
    TEST_CASE("the same train split always yields the same graph and adjacency") {
        IdMaps maps = vocab(5);
        std::vector<Trajectory> train{
            traj(0, {0, 1, 2, 1, 0}),
            traj(1, {2, 3, 3, 4}),
            traj(2, {4, 0, 2}),
        };
        FlowMap f1 = build_flow_map(train, maps, table_for(train, maps));
        FlowMap f2 = build_flow_map(train, maps, table_for(train, maps));
        CHECK(f1.n_nodes == f2.n_nodes);
        CHECK(f1.edges == f2.edges);
        REQUIRE(f1.node_attrs.size() == f2.node_attrs.size());
        for (std::size_t i = 0; i < f1.node_attrs.size(); ++i) {
            CHECK(f1.node_attrs[i].popularity == f2.node_attrs[i].popularity);
            CHECK(f1.node_attrs[i].category == f2.node_attrs[i].category);
            CHECK(f1.node_attrs[i].lat == f2.node_attrs[i].lat);
            CHECK(f1.node_attrs[i].lon == f2.node_attrs[i].lon);
            CHECK(f1.node_attrs[i].freq_norm == f2.node_attrs[i].freq_norm);
        }
        NormalizedAdjacency a1 = normalized_adjacency(f1);
        NormalizedAdjacency a2 = normalized_adjacency(f2);
        for (std::int64_t i = 0; i < a1.values.numel(); ++i) {
            CHECK(a1.values[i] == a2.values[i]);
        }
        FeatureMatrix m1 = feature_matrix(f1, maps.n_categories());
        FeatureMatrix m2 = feature_matrix(f2, maps.n_categories());
        for (std::int64_t i = 0; i < m1.values.numel(); ++i) {
            CHECK(m1.values[i] == m2.values[i]);
        }
    }
}
