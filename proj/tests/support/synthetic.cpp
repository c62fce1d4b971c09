#include "synthetic.hpp"

#include <sstream>

#include "poirec/common.hpp"

namespace poirec::testsupport {

std::vector<RawCheckInRecord> markov_records(int n_trajectories, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RawCheckInRecord> records;
    for (int j = 0; j < n_trajectories; ++j) {
        const std::int64_t start = 1'600'000'000LL + static_cast<std::int64_t>(j) * 43200;
        const int length = 4 + static_cast<int>(rng.bounded(5));
        std::int64_t poi = static_cast<std::int64_t>(rng.bounded(12));
        for (int step = 0; step < length; ++step) {
            RawCheckInRecord r;
            r.user_id = "U" + std::to_string(j % 4);
            r.poi_id = "P" + std::to_string(poi);
            r.category_id = "C" + std::to_string(poi % 3);
            r.category_name = "cat" + std::to_string(poi % 3);
            r.lat = 40.0 + 0.01 * static_cast<double>(poi);
            r.lon = -74.0 + 0.01 * static_cast<double>(poi);
            r.tz_offset_minutes = 0;
            r.timestamp = start + static_cast<std::int64_t>(step) * 3600;
            records.push_back(std::move(r));
            poi = markov_next(poi);
        }
    }
    return records;
}

std::string markov_tsv(int n_trajectories, std::uint64_t seed) {
    std::ostringstream out;
    for (const auto& r : markov_records(n_trajectories, seed)) {
        out << r.user_id << '\t' << r.poi_id << '\t' << r.category_id << '\t' << r.category_name
            << '\t' << r.lat << '\t' << r.lon << '\t' << r.tz_offset_minutes << '\t'
            << r.timestamp << '\n';
    }
    return out.str();
}

MarkovDataset markov_dataset(int n_trajectories, std::uint64_t seed) {
    std::vector<RawCheckInRecord> kept = filter_sparse(markov_records(n_trajectories, seed));
    CheckInDataset dataset = build_dataset(kept);
    MarkovDataset out;
    out.id_maps = dataset.id_maps;
    out.split = split_dataset(segment_trajectories(dataset));
    return out;
}

}  // namespace poirec::testsupport
