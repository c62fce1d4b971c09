#include "poirec/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "poirec/common.hpp"

namespace poirec {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::optional<int> month_number(const std::string& abbr) {
    static const std::array<const char*, 12> names = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    for (int i = 0; i < 12; ++i) {
        if (abbr == names[static_cast<std::size_t>(i)]) return i + 1;
    }
    return std::nullopt;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<long> parse_long(const std::string& s) {
    long v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return std::nullopt;
    if (b != s.data()) return v;  // explicit '+'
    return v;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// "Tue Apr 03 18:00:09 +0000 2012"
std::optional<std::int64_t> parse_foursquare_time(const std::string& text) {
    const auto tok = split_ws(text);
    if (tok.size() != 6) return std::nullopt;
    const auto month = month_number(tok[1]);
    const auto day = parse_long(tok[2]);
    const auto year = parse_long(tok[5]);
    if (!month || !day || !year || *day < 1 || *day > 31) return std::nullopt;

    const std::string& clock = tok[3];
    if (clock.size() != 8 || clock[2] != ':' || clock[5] != ':') return std::nullopt;
    const auto hh = parse_long(clock.substr(0, 2));
    const auto mm = parse_long(clock.substr(3, 2));
    const auto ss = parse_long(clock.substr(6, 2));
    if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;

    const std::string& zone = tok[4];
    if (zone.size() != 5 || (zone[0] != '+' && zone[0] != '-')) return std::nullopt;
    const auto zh = parse_long(zone.substr(1, 2));
    const auto zm = parse_long(zone.substr(3, 2));
    if (!zh || !zm) return std::nullopt;
    const std::int64_t zone_sec = (zone[0] == '-' ? -1 : 1) * (*zh * 3600 + *zm * 60);

    const std::int64_t days = days_from_civil(static_cast<int>(*year), static_cast<int>(*month),
                                              static_cast<int>(*day));
    return days * 86400 + *hh * 3600 + *mm * 60 + *ss - zone_sec;
}

}  // namespace

std::optional<std::int64_t> parse_checkin_time(const std::string& text, const std::string& format) {
    if (format == "foursquare") return parse_foursquare_time(text);
    if (format == "epoch") {
        const auto v = parse_long(text);
        if (!v) return std::nullopt;
        return static_cast<std::int64_t>(*v);
    }
    throw ConfigError("unknown time format '" + format + "'");
}

ParseResult parse_checkins(std::istream& source, const FormatDescriptor& format) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    const int max_col = std::max({format.col_user, format.col_poi, format.col_category_id,
                                  format.col_category_name, format.col_lat, format.col_lon,
                                  format.col_tz_offset, format.col_time});
    if (max_col >= format.n_columns) throw ConfigError("format column index beyond n_columns");

    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (static_cast<int>(cols.size()) != format.n_columns) {
            result.malformed.push_back({line_no, "expected " + std::to_string(format.n_columns) +
                                                     " columns, got " + std::to_string(cols.size())});
            continue;
        }

        const auto lat = parse_double(cols[static_cast<std::size_t>(format.col_lat)]);
        const auto lon = parse_double(cols[static_cast<std::size_t>(format.col_lon)]);
        if (!lat || *lat < -90.0 || *lat > 90.0) {
            result.malformed.push_back({line_no, "bad latitude"});
            continue;
        }
        if (!lon || *lon < -180.0 || *lon > 180.0) {
            result.malformed.push_back({line_no, "bad longitude"});
            continue;
        }
        const auto tz = parse_long(cols[static_cast<std::size_t>(format.col_tz_offset)]);
        if (!tz) {
            result.malformed.push_back({line_no, "bad timezone offset"});
            continue;
        }
        const auto ts =
            parse_checkin_time(cols[static_cast<std::size_t>(format.col_time)], format.time_format);
        if (!ts) {
            result.malformed.push_back({line_no, "bad timestamp"});
            continue;
        }

        RawCheckInRecord rec;
        rec.user_id = cols[static_cast<std::size_t>(format.col_user)];
        rec.poi_id = cols[static_cast<std::size_t>(format.col_poi)];
        rec.category_id = cols[static_cast<std::size_t>(format.col_category_id)];
        rec.category_name = cols[static_cast<std::size_t>(format.col_category_name)];
        rec.lat = *lat;
        rec.lon = *lon;
        rec.tz_offset_minutes = static_cast<int>(*tz);
        rec.timestamp = *ts;
        result.records.push_back(std::move(rec));
    }

    if (result.malformed.size() * 100 > line_no) {
        throw DataError("parse aborted: " + std::to_string(result.malformed.size()) + " of " +
                        std::to_string(line_no) + " lines malformed (limit 1%), first: line " +
                        std::to_string(result.malformed.front().line_no) + " " +
                        result.malformed.front().reason);
    }
    return result;
}

std::vector<RawCheckInRecord> filter_sparse(const std::vector<RawCheckInRecord>& records,
                                            std::size_t min_user_checkins,
                                            std::size_t min_poi_checkins) {
    if (min_user_checkins < 1 || min_poi_checkins < 1) {
        throw DomainError("filter thresholds must be >= 1");
    }
    std::unordered_map<std::string, std::size_t> poi_count;
    for (const auto& r : records) ++poi_count[r.poi_id];

    std::vector<const RawCheckInRecord*> after_poi;
    after_poi.reserve(records.size());
    for (const auto& r : records) {
        if (poi_count[r.poi_id] >= min_poi_checkins) after_poi.push_back(&r);
    }

    std::unordered_map<std::string, std::size_t> user_count;
    for (const auto* r : after_poi) ++user_count[r->user_id];

    std::vector<RawCheckInRecord> out;
    out.reserve(after_poi.size());
    for (const auto* r : after_poi) {
        if (user_count[r->user_id] >= min_user_checkins) out.push_back(*r);
    }
    if (out.empty()) throw DataError("no records survive the sparsity filters");
    return out;
}

IdMaps build_id_maps(const std::vector<RawCheckInRecord>& records) {
    if (records.empty()) throw DataError("cannot build id maps from zero records");
    IdMaps maps;
    for (const auto& r : records) {
        if (maps.category_index.find(r.category_id) == maps.category_index.end()) {
            maps.category_index[r.category_id] = maps.n_categories();
            maps.category_ids.push_back(r.category_id);
            maps.category_names.push_back(r.category_name);
        }
        if (maps.user_index.find(r.user_id) == maps.user_index.end()) {
            maps.user_index[r.user_id] = maps.n_users();
            maps.user_ids.push_back(r.user_id);
        }
        auto it = maps.poi_index.find(r.poi_id);
        if (it == maps.poi_index.end()) {
            maps.poi_index[r.poi_id] = maps.n_pois();
            maps.poi_ids.push_back(r.poi_id);
            maps.poi_meta.push_back({maps.category_index[r.category_id], r.lat, r.lon});
        } else {
            const PoiMeta& meta = maps.poi_meta[static_cast<std::size_t>(it->second)];
            if (std::fabs(meta.lat - r.lat) > 1e-4 || std::fabs(meta.lon - r.lon) > 1e-4) {
                maps.warnings.push_back("poi " + r.poi_id + " has conflicting coordinates; keeping first");
            }
            if (meta.category != maps.category_index[r.category_id]) {
                maps.warnings.push_back("poi " + r.poi_id + " has conflicting category '" +
                                        r.category_name + "'; keeping first");
            }
        }
    }
    return maps;
}

CheckInDataset build_dataset(const std::vector<RawCheckInRecord>& records) {
    CheckInDataset ds;
    ds.id_maps = build_id_maps(records);
    ds.per_user.resize(static_cast<std::size_t>(ds.id_maps.n_users()));
    for (const auto& r : records) {
        CheckIn c;
        c.user = ds.id_maps.user_index.at(r.user_id);
        c.poi = ds.id_maps.poi_index.at(r.poi_id);
        c.time = r.timestamp;
        const std::int64_t local = r.timestamp + static_cast<std::int64_t>(r.tz_offset_minutes) * 60;
        const std::int64_t sec = ((local % 86400) + 86400) % 86400;
        c.local_tod = static_cast<double>(sec) / 86400.0;
        ds.per_user[static_cast<std::size_t>(c.user)].push_back(c);
    }
    for (auto& seq : ds.per_user) {
        std::stable_sort(seq.begin(), seq.end(),
                         [](const CheckIn& a, const CheckIn& b) { return a.time < b.time; });
    }
    return ds;
}

SegmentationResult segment_trajectories_full(const CheckInDataset& dataset,
                                             std::int64_t window_seconds) {
    SegmentationResult result;
    for (std::size_t u = 0; u < dataset.per_user.size(); ++u) {
        const auto& seq = dataset.per_user[u];
        Trajectory cur;
        cur.user = static_cast<std::int64_t>(u);
        for (const CheckIn& c : seq) {
            if (!cur.checkins.empty() && c.time - cur.checkins.front().time > window_seconds) {
                auto& bucket = cur.checkins.size() >= 2 ? result.kept : result.dropped;
                bucket.push_back(std::move(cur));
                cur = Trajectory{};
                cur.user = static_cast<std::int64_t>(u);
            }
            cur.checkins.push_back(c);
        }
        if (!cur.checkins.empty()) {
            auto& bucket = cur.checkins.size() >= 2 ? result.kept : result.dropped;
            bucket.push_back(std::move(cur));
        }
    }
    return result;
}

std::vector<Trajectory> segment_trajectories(const CheckInDataset& dataset,
                                             std::int64_t window_seconds) {
    return segment_trajectories_full(dataset, window_seconds).kept;
}

SplitDataset split_dataset(std::vector<Trajectory> trajectories, double train_frac,
                           double val_frac, double test_frac) {
    if (train_frac <= 0.0 || val_frac <= 0.0 || test_frac <= 0.0 ||
        std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
        throw DomainError("split fractions must be positive and sum to 1");
    }
    std::stable_sort(trajectories.begin(), trajectories.end(),
                     [](const Trajectory& a, const Trajectory& b) {
                         return a.start_time() < b.start_time();
                     });
    const std::size_t n = trajectories.size();
    const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
    if (n_train == 0) throw DataError("train split is empty");

    SplitDataset split;
    split.train.assign(trajectories.begin(), trajectories.begin() + static_cast<std::ptrdiff_t>(n_train));

    std::unordered_set<std::int64_t> train_users;
    std::unordered_set<std::int64_t> train_pois;
    for (const auto& t : split.train) {
        train_users.insert(t.user);
        for (const auto& c : t.checkins) train_pois.insert(c.poi);
    }
    const auto seen_in_train = [&](const Trajectory& t) {
        if (train_users.find(t.user) == train_users.end()) return false;
        for (const auto& c : t.checkins) {
            if (train_pois.find(c.poi) == train_pois.end()) return false;
        }
        return true;
    };

    for (std::size_t i = n_train; i < n; ++i) {
        auto& dst = (i < n_train + n_val) ? split.validation : split.test;
        if (seen_in_train(trajectories[i])) dst.push_back(std::move(trajectories[i]));
    }
    return split;
}

}  // namespace poirec
