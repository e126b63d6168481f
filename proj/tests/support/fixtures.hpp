// Shared test fixtures: the 6-node toy dataset (mirrors data/toy) and a
// seeded random-instance generator for property and oracle tests.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "protohat/dataset.hpp"
#include "protohat/layers.hpp"
#include "protohat/rng.hpp"
#include "protohat/train.hpp"

namespace fixtures {

// 6 nodes (4 "item" targets, 1 "attr_a", 1 "attr_b"), 2 hyperedges, 2
// classes. Identical to the dataset shipped under data/toy.
inline protohat::HinDataset toy() {
    protohat::HinDataset ds;
    ds.graph.n_nodes = 6;
    ds.graph.types.type_names = {"item", "attr_a", "attr_b"};
    ds.graph.types.node_type = {0, 0, 0, 0, 1, 2};
    ds.graph.hyperedges = {{0, 1, 4, 5}, {2, 3, 4, 5}};
    ds.node_ids = {"i0", "i1", "i2", "i3", "a0", "b0"};
    ds.type_local_row = {0, 1, 2, 3, 0, 0};
    ds.labels = {0, 1, 0, 1, -1, -1};
    ds.train_idx = {0, 3};
    ds.val_idx = {1};
    ds.test_idx = {2};
    ds.target_type = 0;
    ds.n_classes = 2;
    ds.features.push_back(protohat::Matrix::from_rows({{0.9, -0.4, 0.2},
                                                       {-0.7, 0.8, -0.1},
                                                       {0.8, -0.5, 0.3},
                                                       {-0.6, 0.7, -0.2}}));
    ds.features.push_back(protohat::Matrix::from_rows({{0.5, -0.3}}));
    ds.features.push_back(protohat::Matrix::from_rows({{-0.2, 0.6}}));
    ds.check_consistency();
    return ds;
}

// The acceptance-grade configuration for the toy fixture: 2 layers, 1 head,
// hidden 8, one prototype per class.
inline protohat::TrainConfig toy_config() {
    protohat::TrainConfig cfg;
    cfg.model.hidden_dim = 8;
    cfg.model.n_layers = 2;
    cfg.model.n_heads = 1;
    cfg.model.k_prototypes = 1;
    cfg.lambda = 0.5;
    return cfg;
}

struct RandomInstance {
    protohat::HinDataset ds;
    protohat::ModelConfig model;
};

// Random heterogeneous instance: n <= 10 nodes over 2-3 types, m <= 4
// hyperedges of 2-4 distinct members, random widths. Type 0 is the target
// type and all its nodes are labeled.
inline RandomInstance random_instance(uint64_t seed, int max_layers = 2, int max_heads = 2) {
    protohat::Rng rng(seed);
    RandomInstance inst;
    auto& ds = inst.ds;

    const int n_types = 2 + rng.uniform_int(2);
    const int n = 4 + rng.uniform_int(7);   // 4..10
    const int m = 1 + rng.uniform_int(4);   // 1..4
    ds.graph.n_nodes = n;
    for (int t = 0; t < n_types; ++t) ds.graph.types.type_names.push_back("type" + std::to_string(t));
    ds.n_classes = 2 + rng.uniform_int(2);
    ds.target_type = 0;

    std::vector<int> dims;
    for (int t = 0; t < n_types; ++t) dims.push_back(1 + rng.uniform_int(4));

    std::vector<int> per_type_count(static_cast<size_t>(n_types), 0);
    for (int v = 0; v < n; ++v) {
        const int t = v == 0 ? 0 : rng.uniform_int(n_types);  // ensure a target exists
        ds.graph.types.node_type.push_back(t);
        ds.type_local_row.push_back(per_type_count[static_cast<size_t>(t)]++);
        ds.node_ids.push_back("n" + std::to_string(v));
    }
    for (int t = 0; t < n_types; ++t) {
        protohat::Matrix feats(per_type_count[static_cast<size_t>(t)], dims[static_cast<size_t>(t)]);
        for (double& x : feats.data()) x = rng.normal(0.0, 1.0);
        ds.features.push_back(std::move(feats));
    }

    for (int e = 0; e < m; ++e) {
        const int size = 2 + rng.uniform_int(std::min(3, n - 1));
        std::vector<int> pool(static_cast<size_t>(n));
        for (int v = 0; v < n; ++v) pool[static_cast<size_t>(v)] = v;
        rng.shuffle(pool);
        ds.graph.hyperedges.emplace_back(pool.begin(), pool.begin() + size);
    }

    ds.labels.assign(static_cast<size_t>(n), -1);
    for (int v = 0; v < n; ++v)
        if (ds.graph.types.node_type[static_cast<size_t>(v)] == 0)
            ds.labels[static_cast<size_t>(v)] = rng.uniform_int(ds.n_classes);

    auto& mc = inst.model;
    mc.n_heads = 1 + rng.uniform_int(max_heads);
    mc.hidden_dim = mc.n_heads * (2 + rng.uniform_int(4));
    mc.n_layers = 1 + rng.uniform_int(max_layers);
    mc.k_prototypes = 1 + rng.uniform_int(2);
    return inst;
}

// Labeled rows (all type-0 nodes) and their labels, for loss construction.
inline std::pair<std::vector<int>, std::vector<int>> labeled_rows(const protohat::HinDataset& ds) {
    std::vector<int> rows, labels;
    for (int v = 0; v < ds.n_nodes(); ++v)
        if (ds.labels[static_cast<size_t>(v)] >= 0) {
            rows.push_back(v);
            labels.push_back(ds.labels[static_cast<size_t>(v)]);
        }
    return {rows, labels};
}

inline double max_abs_diff(const protohat::Matrix& a, const protohat::Matrix& b) {
    double worst = 0.0;
    for (long long i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data()[static_cast<size_t>(i)] -
                                         b.data()[static_cast<size_t>(i)]));
    return worst;
}

}  // namespace fixtures
