#pragma once

#include <cstdint>
#include <vector>

#include "poirec/ingest.hpp"

namespace poirec {

struct PopularityParams {
    double alpha = 0.5;                          // user count vs check-in count
    double beta = 0.5;                           // recent vs past
    std::int64_t recency_window = 90LL * 86400;  // seconds; "previous three months"
    std::int64_t reference_time = 0;             // anchor; recent iff ref - t <= window
};

struct PopularityCounts {
    std::int64_t c_user_recent = 0;
    std::int64_t c_checkin_recent = 0;
    std::int64_t c_user_past = 0;
    std::int64_t c_checkin_past = 0;

    std::int64_t freq() const { return c_checkin_recent + c_checkin_past; }
};

// Raw and normalized score per train-split POI. Normalization is min-max over
// log1p(raw); a constant table maps to 0.5 everywhere.
struct PopularityTable {
    std::vector<std::int64_t> pois;   // train POI indices, ascending
    std::vector<double> raw;          // parallel to pois; -1 entries absent
    std::vector<double> normalized;
    std::vector<PopularityCounts> counts;

    bool covers(std::int64_t poi) const {
        return poi >= 0 && poi < static_cast<std::int64_t>(present_.size()) &&
               present_[static_cast<std::size_t>(poi)];
    }
    double normalized_for(std::int64_t poi) const;
    std::vector<bool> present_;  // dense presence flags up to max POI index
};

std::int64_t max_train_time(const std::vector<Trajectory>& train);

PopularityCounts count_stats(const std::vector<CheckIn>& train_checkins, std::int64_t poi,
                             const PopularityParams& params);

// beta(alpha*Cu_r + (1-alpha)*Cc_r) + (1-beta)(alpha*Cu_p + (1-alpha)*Cc_p)
double popularity(const PopularityCounts& counts, double alpha, double beta);

PopularityTable popularity_table(const std::vector<Trajectory>& train, const IdMaps& id_maps,
                                 const PopularityParams& params);

// Check-in-count-only variant used as the sweep baseline: raw score is each
// POI's total train frequency, same normalization.
PopularityTable frequency_table(const std::vector<Trajectory>& train, const IdMaps& id_maps);

std::vector<CheckIn> flatten_checkins(const std::vector<Trajectory>& trajectories);

}  // namespace poirec
