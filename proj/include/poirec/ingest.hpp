#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace poirec {

// Column layout of a tab-separated check-in log. Defaults match the public
// Foursquare NYC release: user, venue, category id, category name, lat, lon,
// timezone offset in minutes, UTC time string.
struct FormatDescriptor {
    int n_columns = 8;
    int col_user = 0;
    int col_poi = 1;
    int col_category_id = 2;
    int col_category_name = 3;
    int col_lat = 4;
    int col_lon = 5;
    int col_tz_offset = 6;
    int col_time = 7;
    // "foursquare": "Tue Apr 03 18:00:09 +0000 2012"; "epoch": integer seconds
    std::string time_format = "foursquare";
};

struct RawCheckInRecord {
    std::string user_id;
    std::string poi_id;
    std::string category_id;
    std::string category_name;
    double lat = 0.0;
    double lon = 0.0;
    int tz_offset_minutes = 0;
    std::int64_t timestamp = 0;  // UTC epoch seconds
};

struct MalformedLine {
    std::size_t line_no;  // 1-based
    std::string reason;
};

struct ParseResult {
    std::vector<RawCheckInRecord> records;
    std::vector<MalformedLine> malformed;
};

struct CheckIn {
    std::int64_t user = 0;
    std::int64_t poi = 0;
    std::int64_t time = 0;    // UTC epoch seconds
    double local_tod = 0.0;   // local time-of-day fraction in [0,1)
};

struct Trajectory {
    std::int64_t user = 0;
    std::vector<CheckIn> checkins;  // time-sorted, length >= 2 once kept

    std::int64_t start_time() const { return checkins.front().time; }
};

struct PoiMeta {
    std::int64_t category = 0;
    double lat = 0.0;
    double lon = 0.0;
};

// Bijections between raw string ids and dense indices, assigned in order of
// first appearance over the filtered record set.
struct IdMaps {
    std::vector<std::string> user_ids;      // index -> raw id
    std::vector<std::string> poi_ids;
    std::vector<std::string> category_ids;
    std::vector<std::string> category_names;  // parallel to category_ids
    std::vector<PoiMeta> poi_meta;            // parallel to poi_ids
    std::unordered_map<std::string, std::int64_t> user_index;
    std::unordered_map<std::string, std::int64_t> poi_index;
    std::unordered_map<std::string, std::int64_t> category_index;
    std::vector<std::string> warnings;

    std::int64_t n_users() const { return static_cast<std::int64_t>(user_ids.size()); }
    std::int64_t n_pois() const { return static_cast<std::int64_t>(poi_ids.size()); }
    std::int64_t n_categories() const { return static_cast<std::int64_t>(category_ids.size()); }
};

struct CheckInDataset {
    std::vector<std::vector<CheckIn>> per_user;  // user index -> time-sorted sequence
    IdMaps id_maps;
};

struct SplitDataset {
    std::vector<Trajectory> train;
    std::vector<Trajectory> validation;
    std::vector<Trajectory> test;
};

struct SegmentationResult {
    std::vector<Trajectory> kept;     // length >= 2
    std::vector<Trajectory> dropped;  // singletons
};

constexpr std::int64_t kDayWindowSeconds = 24 * 3600;

// Parses the raw log. Malformed lines are collected; a DataError is thrown
// when they exceed 1% of all lines.
ParseResult parse_checkins(std::istream& source, const FormatDescriptor& format = {});

// POI threshold first, user threshold second, one pass each.
std::vector<RawCheckInRecord> filter_sparse(const std::vector<RawCheckInRecord>& records,
                                            std::size_t min_user_checkins = 10,
                                            std::size_t min_poi_checkins = 10);

IdMaps build_id_maps(const std::vector<RawCheckInRecord>& records);

CheckInDataset build_dataset(const std::vector<RawCheckInRecord>& records);

// Greedy cuts: a trajectory holds every check-in within `window_seconds` of
// its first one; singletons are dropped as outliers.
SegmentationResult segment_trajectories_full(const CheckInDataset& dataset,
                                             std::int64_t window_seconds = kDayWindowSeconds);
std::vector<Trajectory> segment_trajectories(const CheckInDataset& dataset,
                                             std::int64_t window_seconds = kDayWindowSeconds);

// Chronological split by trajectory start time, then strict exclusion:
// validation/test trajectories referencing a user or POI absent from the
// train portion are dropped entirely.
SplitDataset split_dataset(std::vector<Trajectory> trajectories, double train_frac = 0.8,
                           double val_frac = 0.1, double test_frac = 0.1);

std::optional<std::int64_t> parse_checkin_time(const std::string& text, const std::string& format);

}  // namespace poirec
