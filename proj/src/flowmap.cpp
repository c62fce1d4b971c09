#include "poirec/flowmap.hpp"

#include <algorithm>
#include <cmath>

#include "poirec/common.hpp"

namespace poirec {

std::int64_t FlowMap::total_edge_weight() const {
    std::int64_t sum = 0;
    for (const auto& [edge, w] : edges) sum += w;
    return sum;
}

FlowMap build_flow_map(const std::vector<Trajectory>& train, const IdMaps& id_maps,
                       const PopularityTable& pop) {
    if (train.empty()) throw DataError("flow map needs a nonempty train split");
    FlowMap fm;
    fm.n_nodes = id_maps.n_pois();
    for (const auto& t : train) {
        for (std::size_t i = 0; i + 1 < t.checkins.size(); ++i) {
            ++fm.edges[{t.checkins[i].poi, t.checkins[i + 1].poi}];
        }
    }

    // Node attributes cover the full vocabulary; POIs outside the train split
    // stay as isolated zero-popularity nodes.
    std::int64_t max_freq = 0;
    std::vector<std::int64_t> freq(static_cast<std::size_t>(fm.n_nodes), 0);
    for (const auto& t : train)
        for (const auto& c : t.checkins) {
            ++freq[static_cast<std::size_t>(c.poi)];
        }
    for (std::int64_t f : freq) max_freq = std::max(max_freq, f);

    double lo_logf = HUGE_VAL, hi_logf = -HUGE_VAL;
    for (std::int64_t p = 0; p < fm.n_nodes; ++p) {
        if (freq[static_cast<std::size_t>(p)] == 0) continue;
        const double lf = std::log1p(static_cast<double>(freq[static_cast<std::size_t>(p)]));
        lo_logf = std::min(lo_logf, lf);
        hi_logf = std::max(hi_logf, lf);
    }

    fm.node_attrs.resize(static_cast<std::size_t>(fm.n_nodes));
    for (std::int64_t p = 0; p < fm.n_nodes; ++p) {
        NodeAttrs& a = fm.node_attrs[static_cast<std::size_t>(p)];
        const PoiMeta& meta = id_maps.poi_meta[static_cast<std::size_t>(p)];
        a.category = meta.category;
        a.lat = meta.lat;
        a.lon = meta.lon;
        a.popularity = pop.covers(p) ? pop.normalized_for(p) : 0.0;
        a.freq_norm = freq[static_cast<std::size_t>(p)] == 0
                          ? 0.0
                          : minmax_norm(std::log1p(static_cast<double>(
                                            freq[static_cast<std::size_t>(p)])),
                                        lo_logf, hi_logf);
    }
    return fm;
}

FeatureMatrix feature_matrix(const FlowMap& fm, std::int64_t n_categories, bool include_freq) {
    for (const auto& a : fm.node_attrs) {
        if (a.category < 0 || a.category >= n_categories) {
            throw ShapeError("category index " + std::to_string(a.category) +
                             " outside [0, " + std::to_string(n_categories) + ")");
        }
    }
    double lat_lo = HUGE_VAL, lat_hi = -HUGE_VAL, lon_lo = HUGE_VAL, lon_hi = -HUGE_VAL;
    for (const auto& a : fm.node_attrs) {
        lat_lo = std::min(lat_lo, a.lat);
        lat_hi = std::max(lat_hi, a.lat);
        lon_lo = std::min(lon_lo, a.lon);
        lon_hi = std::max(lon_hi, a.lon);
    }

    FeatureMatrix out;
    out.n_categories = n_categories;
    out.includes_freq = include_freq;
    const std::int64_t base = include_freq ? 4 : 3;
    out.values = nn::Tensor(fm.n_nodes, base + n_categories);
    out.column_names = {"popularity"};
    if (include_freq) out.column_names.push_back("freq_norm");
    out.column_names.push_back("lat_norm");
    out.column_names.push_back("lon_norm");
    for (std::int64_t c = 0; c < n_categories; ++c) {
        out.column_names.push_back("category_" + std::to_string(c));
    }

    for (std::int64_t p = 0; p < fm.n_nodes; ++p) {
        const NodeAttrs& a = fm.node_attrs[static_cast<std::size_t>(p)];
        std::int64_t col = 0;
        out.values.at(p, col++) = a.popularity;
        if (include_freq) out.values.at(p, col++) = a.freq_norm;
        out.values.at(p, col++) = minmax_norm(a.lat, lat_lo, lat_hi);
        out.values.at(p, col++) = minmax_norm(a.lon, lon_lo, lon_hi);
        out.values.at(p, base + a.category) = 1.0;
    }
    return out;
}

NormalizedAdjacency normalized_adjacency(const FlowMap& fm, double self_loop_weight) {
    const std::int64_t n = fm.n_nodes;
    if (n < 1) throw ShapeError("normalized adjacency needs at least one node");
    nn::Tensor sym(n, n);
    for (const auto& [edge, w] : fm.edges) {
        sym.at(edge.first, edge.second) += static_cast<double>(w);
        sym.at(edge.second, edge.first) += static_cast<double>(w);
    }
    for (std::int64_t i = 0; i < n; ++i) sym.at(i, i) += self_loop_weight;

    std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::int64_t j = 0; j < n; ++j) deg += sym.at(i, j);
        inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
    }

    NormalizedAdjacency adj;
    adj.values = nn::Tensor(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            adj.values.at(i, j) = inv_sqrt_deg[static_cast<std::size_t>(i)] * sym.at(i, j) *
                                  inv_sqrt_deg[static_cast<std::size_t>(j)];
    return adj;
}

}  // namespace poirec
