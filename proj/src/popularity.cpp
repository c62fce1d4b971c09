#include "poirec/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "poirec/common.hpp"

namespace poirec {

double PopularityTable::normalized_for(std::int64_t poi) const {
    for (std::size_t i = 0; i < pois.size(); ++i) {
        if (pois[i] == poi) return normalized[i];
    }
    throw DataError("poi " + std::to_string(poi) + " not in popularity table");
}

std::int64_t max_train_time(const std::vector<Trajectory>& train) {
    std::int64_t mx = 0;
    for (const auto& t : train)
        for (const auto& c : t.checkins) mx = std::max(mx, c.time);
    return mx;
}

std::vector<CheckIn> flatten_checkins(const std::vector<Trajectory>& trajectories) {
    std::vector<CheckIn> out;
    for (const auto& t : trajectories) out.insert(out.end(), t.checkins.begin(), t.checkins.end());
    return out;
}

PopularityCounts count_stats(const std::vector<CheckIn>& train_checkins, std::int64_t poi,
                             const PopularityParams& params) {
    PopularityCounts counts;
    std::unordered_set<std::int64_t> recent_users;
    std::unordered_set<std::int64_t> past_users;
    bool seen = false;
    for (const auto& c : train_checkins) {
        if (c.poi != poi) continue;
        seen = true;
        if (params.reference_time - c.time <= params.recency_window) {
            ++counts.c_checkin_recent;
            recent_users.insert(c.user);
        } else {
            ++counts.c_checkin_past;
            past_users.insert(c.user);
        }
    }
    if (!seen) throw DataError("poi " + std::to_string(poi) + " absent from train split");
    counts.c_user_recent = static_cast<std::int64_t>(recent_users.size());
    counts.c_user_past = static_cast<std::int64_t>(past_users.size());
    return counts;
}

double popularity(const PopularityCounts& counts, double alpha, double beta) {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) {
        throw DomainError("alpha and beta must lie in [0, 1]");
    }
    const double recent = alpha * static_cast<double>(counts.c_user_recent) +
                          (1.0 - alpha) * static_cast<double>(counts.c_checkin_recent);
    const double past = alpha * static_cast<double>(counts.c_user_past) +
                        (1.0 - alpha) * static_cast<double>(counts.c_checkin_past);
    return beta * recent + (1.0 - beta) * past;
}

namespace {

PopularityTable finalize_table(std::vector<std::int64_t> pois, std::vector<double> raw,
                               std::vector<PopularityCounts> counts) {
    PopularityTable table;
    table.pois = std::move(pois);
    table.raw = std::move(raw);
    table.counts = std::move(counts);

    double lo = HUGE_VAL, hi = -HUGE_VAL;
    std::vector<double> logs(table.raw.size());
    for (std::size_t i = 0; i < table.raw.size(); ++i) {
        logs[i] = std::log1p(table.raw[i]);
        lo = std::min(lo, logs[i]);
        hi = std::max(hi, logs[i]);
    }
    table.normalized.resize(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) table.normalized[i] = minmax_norm(logs[i], lo, hi);

    std::int64_t max_poi = -1;
    for (std::int64_t p : table.pois) max_poi = std::max(max_poi, p);
    table.present_.assign(static_cast<std::size_t>(max_poi + 1), false);
    for (std::int64_t p : table.pois) table.present_[static_cast<std::size_t>(p)] = true;
    return table;
}

std::vector<std::int64_t> train_pois_sorted(const std::vector<CheckIn>& checkins) {
    std::unordered_set<std::int64_t> set;
    for (const auto& c : checkins) set.insert(c.poi);
    std::vector<std::int64_t> pois(set.begin(), set.end());
    std::sort(pois.begin(), pois.end());
    return pois;
}

}  // namespace

PopularityTable popularity_table(const std::vector<Trajectory>& train, const IdMaps& id_maps,
                                 const PopularityParams& params) {
    (void)id_maps;
    if (train.empty()) throw DataError("popularity table needs a nonempty train split");
    const auto checkins = flatten_checkins(train);
    const auto pois = train_pois_sorted(checkins);

    // One scan for all POIs; equivalent to per-POI count_stats over the split.
    std::unordered_map<std::int64_t, PopularityCounts> by_poi;
    std::unordered_map<std::int64_t, std::unordered_set<std::int64_t>> recent_users, past_users;
    for (const auto& c : checkins) {
        auto& counts = by_poi[c.poi];
        if (params.reference_time - c.time <= params.recency_window) {
            ++counts.c_checkin_recent;
            recent_users[c.poi].insert(c.user);
        } else {
            ++counts.c_checkin_past;
            past_users[c.poi].insert(c.user);
        }
    }

    std::vector<double> raw(pois.size());
    std::vector<PopularityCounts> counts(pois.size());
    for (std::size_t i = 0; i < pois.size(); ++i) {
        PopularityCounts c = by_poi[pois[i]];
        c.c_user_recent = static_cast<std::int64_t>(recent_users[pois[i]].size());
        c.c_user_past = static_cast<std::int64_t>(past_users[pois[i]].size());
        counts[i] = c;
        raw[i] = popularity(c, params.alpha, params.beta);
    }
    return finalize_table(pois, std::move(raw), std::move(counts));
}

PopularityTable frequency_table(const std::vector<Trajectory>& train, const IdMaps& id_maps) {
    (void)id_maps;
    if (train.empty()) throw DataError("frequency table needs a nonempty train split");
    const auto checkins = flatten_checkins(train);
    const auto pois = train_pois_sorted(checkins);

    std::unordered_map<std::int64_t, std::int64_t> freq;
    for (const auto& c : checkins) ++freq[c.poi];

    std::vector<double> raw(pois.size());
    std::vector<PopularityCounts> counts(pois.size());
    for (std::size_t i = 0; i < pois.size(); ++i) {
        raw[i] = static_cast<double>(freq[pois[i]]);
        counts[i].c_checkin_recent = freq[pois[i]];
    }
    return finalize_table(pois, std::move(raw), std::move(counts));
}

}  // namespace poirec
