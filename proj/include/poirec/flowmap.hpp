#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "poirec/ingest.hpp"
#include "poirec/nn/tensor.hpp"
#include "poirec/popularity.hpp"

namespace poirec {

struct NodeAttrs {
    double popularity = 0.0;  // normalized, [0,1]
    std::int64_t category = 0;
    double lat = 0.0;
    double lon = 0.0;
    double freq_norm = 0.0;  // kept for the optional raw-frequency feature
};

// Attributed weighted directed graph over train-split POIs. Edge weights
// count consecutive visits across all train trajectories; self-loops appear
// when a trajectory revisits the same POI back to back.
struct FlowMap {
    std::int64_t n_nodes = 0;  // full POI vocabulary size
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> edges;
    std::vector<NodeAttrs> node_attrs;  // one row per node

    std::int64_t total_edge_weight() const;
};

struct FeatureMatrix {
    nn::Tensor values;                      // N x F
    std::vector<std::string> column_names;  // layout descriptor
    std::int64_t n_categories = 0;
    bool includes_freq = false;
};

struct NormalizedAdjacency {
    nn::Tensor values;  // N x N, symmetric
};

FlowMap build_flow_map(const std::vector<Trajectory>& train, const IdMaps& id_maps,
                       const PopularityTable& pop);

// Columns: popularity, [freq_norm when include_freq], lat_norm, lon_norm,
// one-hot category block. Coordinates min-max normalized over train POIs.
FeatureMatrix feature_matrix(const FlowMap& fm, std::int64_t n_categories,
                             bool include_freq = false);

// A_sym = A + A^T on weights, then D^{-1/2} (A_sym + lambda I) D^{-1/2} with
// D the row-degree of (A_sym + lambda I).
NormalizedAdjacency normalized_adjacency(const FlowMap& fm, double self_loop_weight = 1.0);

}  // namespace poirec
