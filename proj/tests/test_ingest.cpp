#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>
#include <utility>
#include <sstream>
#include <string>
#include <vector>

#include "poirec/common.hpp"
#include "poirec/ingest.hpp"
#include "synthetic.hpp"

using namespace poirec;

namespace {

std::string fixture_path() {
    return std::string(POIREC_SOURCE_DIR) + "/tests/fixtures/checkins_200.tsv";
}

RawCheckInRecord rec(const std::string& user, const std::string& poi, std::int64_t t,
                     const std::string& cat = "c1") {
    RawCheckInRecord r;
    r.user_id = user;
    r.poi_id = poi;
    r.category_id = cat;
    r.category_name = "name-" + cat;
    r.lat = 40.0;
    r.lon = -74.0;
    r.tz_offset_minutes = 0;
    r.timestamp = t;
    return r;
}

Trajectory traj(std::int64_t user, std::vector<std::int64_t> pois, std::int64_t start) {
    Trajectory t;
    t.user = user;
    std::int64_t when = start;
    for (std::int64_t p : pois) {
        CheckIn c;
        c.user = user;
        c.poi = p;
        c.time = when;
        when += 3600;
        t.checkins.push_back(c);
    }
    return t;
}

}  // namespace

TEST_SUITE("time parsing") {
    TEST_CASE("foursquare timestamp maps to the documented epoch") {
        auto t = parse_checkin_time("Tue Apr 03 18:00:09 +0000 2012", "foursquare");
        REQUIRE(t.has_value());
        CHECK(*t == 1333476009);
    }

    TEST_CASE("epoch format parses integers verbatim") {
        auto t = parse_checkin_time("1333476009", "epoch");
        REQUIRE(t.has_value());
        CHECK(*t == 1333476009);
        CHECK_FALSE(parse_checkin_time("not-a-number", "epoch").has_value());
    }

    TEST_CASE("garbage foursquare strings are rejected") {
        CHECK_FALSE(parse_checkin_time("Tue Apr 03", "foursquare").has_value());
        CHECK_FALSE(parse_checkin_time("Xxx Zzz 99 99:99:99 +0000 2012", "foursquare").has_value());
    }
}

TEST_SUITE("log parsing") {
    TEST_CASE("well-formed lines produce full records") {
        std::istringstream in(
            "u9\tp7\tc2\tmuseum\t40.7204\t-74.0018\t-300\tTue Apr 03 18:00:09 +0000 2012\n");
        ParseResult r = parse_checkins(in);
        REQUIRE(r.records.size() == 1);
        CHECK(r.malformed.empty());
        const RawCheckInRecord& c = r.records[0];
        CHECK(c.user_id == "u9");
        CHECK(c.poi_id == "p7");
        CHECK(c.category_id == "c2");
        CHECK(c.category_name == "museum");
        CHECK(c.lat == doctest::Approx(40.7204));
        CHECK(c.lon == doctest::Approx(-74.0018));
        CHECK(c.tz_offset_minutes == -300);
        CHECK(c.timestamp == 1333476009);
    }

    TEST_CASE("short lines and out-of-range coordinates are collected with line numbers") {
        std::string log;
        for (int i = 0; i < 297; ++i) {
            log += "u\tp\tc\tn\t40.0\t-74.0\t0\t" + std::to_string(1000 + i) + "\n";
        }
        log += "u1\tp1\tc1\tx\n";                          // line 298: short
        log += "u1\tp1\tc1\tx\t95.0\t-74.0\t0\t2000\n";    // line 299: bad lat
        log += "u1\tp1\tc1\tx\t40.0\t-200.0\t0\t3000\n";   // line 300: bad lon
        FormatDescriptor fmt;
        fmt.time_format = "epoch";
        std::istringstream in(log);
        ParseResult r = parse_checkins(in, fmt);  // 3 of 300 = 1%, no abort
        CHECK(r.records.size() == 297);
        REQUIRE(r.malformed.size() == 3);
        CHECK(r.malformed[0].line_no == 298);
        CHECK(r.malformed[1].line_no == 299);
        CHECK(r.malformed[2].line_no == 300);
    }

    TEST_CASE("over one percent malformed aborts, exactly one percent does not") {
        auto make_log = [](int good, int bad) {
            std::string log;
            for (int i = 0; i < good; ++i) {
                log += "u\tp\tc\tn\t40.0\t-74.0\t0\t" + std::to_string(1000 + i) + "\n";
            }
            for (int i = 0; i < bad; ++i) log += "broken line\n";
            return log;
        };
        FormatDescriptor fmt;
        fmt.time_format = "epoch";
        {
            std::istringstream in(make_log(99, 1));  // 1 of 100
            CHECK_NOTHROW(parse_checkins(in, fmt));
        }
        {
            std::istringstream in(make_log(98, 2));  // 2 of 100
            CHECK_THROWS_AS(parse_checkins(in, fmt), DataError);
        }
    }

    TEST_CASE("unknown time format is a configuration error") {
        std::istringstream in("u\tp\tc\tn\t40.0\t-74.0\t0\t1000\n");
        FormatDescriptor fmt;
        fmt.time_format = "weird";
        CHECK_THROWS_AS(parse_checkins(in, fmt), ConfigError);
    }
}

TEST_SUITE("sparsity filter") {
    TEST_CASE("venue threshold runs before the user threshold") {
        std::vector<RawCheckInRecord> records;
        for (int i = 0; i < 10; ++i) records.push_back(rec("u1", "A", 1000 + i));
        for (int i = 0; i < 9; ++i) records.push_back(rec("u1", "B", 2000 + i));
        for (int i = 0; i < 9; ++i) records.push_back(rec("u2", "A", 3000 + i));
        // A has 19 records and survives; B has 9 and is removed. u1 then has
        // exactly 10 records (kept on the boundary); u2 has 9 and is removed.
        auto kept = filter_sparse(records);
        REQUIRE(kept.size() == 10);
        for (const auto& r : kept) {
            CHECK(r.user_id == "u1");
            CHECK(r.poi_id == "A");
        }
    }

    TEST_CASE("removing a sparse venue can cascade into removing its visitor") {
        std::vector<RawCheckInRecord> records;
        for (int i = 0; i < 10; ++i) records.push_back(rec("u1", "A", 1000 + i));
        for (int i = 0; i < 3; ++i) records.push_back(rec("u3", "B", 2000 + i));
        for (int i = 0; i < 9; ++i) records.push_back(rec("u3", "A", 3000 + i));
        auto kept = filter_sparse(records);
        REQUIRE(kept.size() == 10);
        for (const auto& r : kept) CHECK(r.user_id == "u1");
    }

    TEST_CASE("the user pass does not rescan venue counts") {
        // After u2's records fall to the user pass, A is left with 9 records,
        // but the venue pass already ran: the survivors keep A.
        std::vector<RawCheckInRecord> records;
        for (int i = 0; i < 11; ++i) records.push_back(rec("u2", "A", 1000 + i));
        for (int i = 0; i < 2; ++i) records.push_back(rec("u2", "B", 5000 + i));
        for (int i = 0; i < 9; ++i) records.push_back(rec("u1", "A", 2000 + i));
        for (int i = 0; i < 10; ++i) records.push_back(rec("u1", "C", 3000 + i));
        // Venue pass: A=20 keeps, B=2 drops, C=10 keeps. User pass: u2 has 11,
        // u1 has 19, both keep. A's post-hoc count is irrelevant.
        auto kept = filter_sparse(records);
        CHECK(kept.size() == 30);
    }

    TEST_CASE("thresholds below one are rejected") {
        std::vector<RawCheckInRecord> records{rec("u", "p", 1)};
        CHECK_THROWS_AS(filter_sparse(records, 0, 10), DomainError);
        CHECK_THROWS_AS(filter_sparse(records, 10, 0), DomainError);
    }

    TEST_CASE("an empty survivor set is a data error") {
        std::vector<RawCheckInRecord> records{rec("u", "p", 1), rec("u", "p", 2)};
        CHECK_THROWS_AS(filter_sparse(records), DataError);
    }
}

TEST_SUITE("id maps") {
    TEST_CASE("indices follow first appearance") {
        std::vector<RawCheckInRecord> records{rec("b", "q", 1, "c2"), rec("a", "p", 2, "c1"),
                                              rec("b", "q", 3, "c2")};
        IdMaps maps = build_id_maps(records);
        CHECK(maps.user_ids == std::vector<std::string>{"b", "a"});
        CHECK(maps.poi_ids == std::vector<std::string>{"q", "p"});
        CHECK(maps.category_ids == std::vector<std::string>{"c2", "c1"});
        CHECK(maps.user_index.at("a") == 1);
        CHECK(maps.poi_index.at("q") == 0);
        CHECK(maps.poi_meta[0].category == 0);
        CHECK(maps.poi_meta[1].category == 1);
        CHECK(maps.warnings.empty());
    }

    TEST_CASE("conflicting venue metadata keeps the first sighting and warns") {
        auto r1 = rec("u", "p", 1, "c1");
        auto r2 = rec("u", "p", 2, "c2");     // category flips
        auto r3 = rec("u", "p", 3, "c1");
        r3.lat = 40.001;                      // drifts beyond the tolerance
        auto r4 = rec("u", "p", 4, "c1");
        r4.lat = 40.0 + 5e-5;                 // inside the tolerance: no warning
        IdMaps maps = build_id_maps({r1, r2, r3, r4});
        CHECK(maps.n_pois() == 1);
        CHECK(maps.poi_meta[0].category == 0);
        CHECK(maps.poi_meta[0].lat == doctest::Approx(40.0));
        REQUIRE(maps.warnings.size() == 2);
        CHECK(maps.warnings[0].find("category") != std::string::npos);
        CHECK(maps.warnings[1].find("coordinates") != std::string::npos);
    }

    TEST_CASE("zero records cannot produce id maps") {
        CHECK_THROWS_AS(build_id_maps({}), DataError);
    }
}

TEST_SUITE("dataset assembly") {
    TEST_CASE("per-user sequences come out time sorted with local time-of-day") {
        auto r1 = rec("u", "p", 1333476009);  // 18:00:09 UTC
        r1.tz_offset_minutes = -300;          // 13:00:09 local
        auto r2 = rec("u", "q", 1333462009);
        r2.tz_offset_minutes = -300;
        CheckInDataset ds = build_dataset({r1, r2});
        REQUIRE(ds.per_user.size() == 1);
        REQUIRE(ds.per_user[0].size() == 2);
        CHECK(ds.per_user[0][0].time == 1333462009);
        CHECK(ds.per_user[0][1].time == 1333476009);
        CHECK(ds.per_user[0][1].local_tod == doctest::Approx(46809.0 / 86400.0).epsilon(1e-12));
        CHECK(ds.per_user[0][0].local_tod >= 0.0);
        CHECK(ds.per_user[0][0].local_tod < 1.0);
    }

    TEST_CASE("negative local times wrap into the previous day") {
        auto r = rec("u", "p", 3600);  // 01:00 UTC, -300 min -> 20:00 previous day
        r.tz_offset_minutes = -300;
        CheckInDataset ds = build_dataset({r});
        CHECK(ds.per_user[0][0].local_tod == doctest::Approx(72000.0 / 86400.0).epsilon(1e-12));
    }
}

TEST_SUITE("trajectory segmentation") {
    TEST_CASE("a check-in exactly one window after the first still belongs") {
        CheckInDataset ds = build_dataset({rec("u", "p", 0), rec("u", "p", 86400),
                                           rec("u", "p", 86401), rec("u", "p", 90000)});
        SegmentationResult seg = segment_trajectories_full(ds);
        REQUIRE(seg.kept.size() == 2);
        CHECK(seg.dropped.empty());
        CHECK(seg.kept[0].checkins.size() == 2);
        CHECK(seg.kept[0].checkins[1].time == 86400);
        CHECK(seg.kept[1].checkins.front().time == 86401);
    }

    TEST_CASE("the window anchors at the first check-in, not the previous one") {
        // 50000 and 100000 are within 86400 of each other but 100000 > 86400
        // from the anchor, so the trajectory breaks.
        CheckInDataset ds = build_dataset(
            {rec("u", "p", 0), rec("u", "p", 50000), rec("u", "p", 100000), rec("u", "p", 110000)});
        SegmentationResult seg = segment_trajectories_full(ds);
        REQUIRE(seg.kept.size() == 2);
        CHECK(seg.kept[0].checkins.size() == 2);
        CHECK(seg.kept[1].checkins.size() == 2);
    }

    TEST_CASE("singleton segments are dropped and reported") {
        CheckInDataset ds = build_dataset({rec("u", "p", 0), rec("u", "p", 3600),
                                           rec("u", "p", 300000)});
        SegmentationResult seg = segment_trajectories_full(ds);
        REQUIRE(seg.kept.size() == 1);
        REQUIRE(seg.dropped.size() == 1);
        CHECK(seg.dropped[0].checkins.front().time == 300000);
        CHECK(segment_trajectories(ds).size() == 1);
    }

    TEST_CASE("trajectories carry their user and a start accessor") {
        CheckInDataset ds = build_dataset({rec("x", "p", 100), rec("x", "p", 200)});
        auto kept = segment_trajectories(ds);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].user == 0);
        CHECK(kept[0].start_time() == 100);
    }
}

TEST_SUITE("chronological split") {
    TEST_CASE("floors of the fractions, remainder to test") {
        std::vector<Trajectory> ts;
        for (int i = 0; i < 10; ++i) ts.push_back(traj(0, {0, 1}, 1000 * (10 - i)));
        SplitDataset split = split_dataset(ts);
        CHECK(split.train.size() == 8);
        CHECK(split.validation.size() == 1);
        CHECK(split.test.size() == 1);
        // Sorted by start time despite reversed input.
        CHECK(split.train.front().start_time() == 1000);
        CHECK(split.test.front().start_time() == 10000);
    }

    TEST_CASE("validation and test trajectories with unseen users or venues vanish") {
        std::vector<Trajectory> ts;
        for (int i = 0; i < 8; ++i) ts.push_back(traj(0, {0, 1}, 1000 + i));
        ts.push_back(traj(0, {0, 7}, 9000));  // venue 7 never trains
        ts.push_back(traj(5, {0, 1}, 9500));  // user 5 never trains
        SplitDataset split = split_dataset(ts);
        CHECK(split.train.size() == 8);
        CHECK(split.validation.empty());
        CHECK(split.test.empty());
    }

    TEST_CASE("fraction validation") {
        std::vector<Trajectory> ts{traj(0, {0, 1}, 1), traj(0, {0, 1}, 2)};
        CHECK_THROWS_AS(split_dataset(ts, 0.5, 0.2, 0.2), DomainError);
        CHECK_THROWS_AS(split_dataset(ts, -0.1, 0.6, 0.5), DomainError);
    }

    TEST_CASE("an empty train portion is a data error") {
        CHECK_THROWS_AS(split_dataset({}, 0.8, 0.1, 0.1), DataError);
    }
}

TEST_SUITE("reference log end to end") {
    // Frozen expectations for tests/fixtures/checkins_200.tsv, regenerated by
    // tests/oracles/gen_fixture.py alongside the file itself.
    TEST_CASE("full pipeline reproduces the reference numbers") {
        std::ifstream in(fixture_path());
        REQUIRE(in.good());
        ParseResult parsed = parse_checkins(in);
        CHECK(parsed.malformed.size() == 2);
        CHECK(parsed.malformed[0].line_no == 50);
        CHECK(parsed.malformed[1].line_no == 150);
        CHECK(parsed.records.size() == 198);

        auto kept = filter_sparse(parsed.records);
        CHECK(kept.size() == 171);

        CheckInDataset ds = build_dataset(kept);
        CHECK(ds.id_maps.n_users() == 7);
        CHECK(ds.id_maps.n_pois() == 9);
        CHECK(ds.id_maps.n_categories() == 3);
        CHECK(ds.id_maps.warnings.size() == 2);
        CHECK(ds.id_maps.poi_index.count("P9") == 1);
        CHECK(ds.id_maps.poi_index.count("PS1") == 0);
        CHECK(ds.id_maps.user_index.count("UNX") == 1);
        CHECK(ds.id_maps.user_index.count("USP") == 0);
        CHECK(ds.id_maps.user_index.count("UCA") == 0);

        SegmentationResult seg = segment_trajectories_full(ds);
        CHECK(seg.kept.size() == 44);
        CHECK(seg.dropped.size() == 2);

        SplitDataset split = split_dataset(seg.kept);
        CHECK(split.train.size() == 35);
        CHECK(split.validation.size() == 4);
        CHECK(split.test.size() == 4);

        // The planted late-arriving user lands in the test region and is
        // excluded outright; its venue stays in the vocabulary only.
        const std::int64_t unx = ds.id_maps.user_index.at("UNX");
        const std::int64_t p9 = ds.id_maps.poi_index.at("P9");
        std::int64_t checkins = 0;
        for (const auto* part : {&split.train, &split.validation, &split.test}) {
            for (const auto& t : *part) {
                CHECK(t.user != unx);
                for (const auto& c : t.checkins) {
                    CHECK(c.poi != p9);
                    ++checkins;
                }
            }
        }
        CHECK(checkins == 159);
    }
}

TEST_SUITE("pipeline properties") {
    TEST_CASE("segmentation partitions each user's sequence exactly") {
        std::istringstream in(testsupport::markov_tsv(40));
        FormatDescriptor fmt;
        fmt.time_format = "epoch";
        ParseResult parsed = parse_checkins(in, fmt);
        CheckInDataset dataset = build_dataset(filter_sparse(parsed.records));
        SegmentationResult seg = segment_trajectories_full(dataset);

        // Multiset of (poi, time) per user across kept + dropped trajectories
        // must equal the user's filtered sequence.
        std::vector<std::multiset<std::pair<std::int64_t, std::int64_t>>> rebuilt(
            dataset.per_user.size());
        for (const auto* group : {&seg.kept, &seg.dropped}) {
            for (const auto& t : *group) {
                for (const auto& c : t.checkins) {
                    rebuilt[static_cast<std::size_t>(t.user)].insert({c.poi, c.time});
                }
            }
        }
        for (std::size_t u = 0; u < dataset.per_user.size(); ++u) {
            std::multiset<std::pair<std::int64_t, std::int64_t>> original;
            for (const auto& c : dataset.per_user[u]) original.insert({c.poi, c.time});
            CHECK(rebuilt[u] == original);
        }
    }

    TEST_CASE("every kept trajectory is sorted and spans at most one day") {
        std::istringstream in(testsupport::markov_tsv(60));
        FormatDescriptor fmt;
        fmt.time_format = "epoch";
        ParseResult parsed = parse_checkins(in, fmt);
        CheckInDataset dataset = build_dataset(filter_sparse(parsed.records));
        std::vector<Trajectory> kept = segment_trajectories(dataset);
        REQUIRE(!kept.empty());
        for (const auto& t : kept) {
            REQUIRE(t.checkins.size() >= 2);
            CHECK(t.checkins.back().time - t.checkins.front().time <= 24 * 3600);
            for (std::size_t i = 1; i < t.checkins.size(); ++i) {
                CHECK(t.checkins[i - 1].time <= t.checkins[i].time);
            }
        }
    }

    TEST_CASE("identical input bytes produce identical splits") {
        const std::string tsv = testsupport::markov_tsv(50);
        auto build = [&] {
            std::istringstream in(tsv);
            FormatDescriptor fmt;
            fmt.time_format = "epoch";
            ParseResult parsed = parse_checkins(in, fmt);
            CheckInDataset dataset = build_dataset(filter_sparse(parsed.records));
            return split_dataset(segment_trajectories(dataset));
        };
        const SplitDataset a = build();
        const SplitDataset b = build();
        auto same = [](const std::vector<Trajectory>& x, const std::vector<Trajectory>& y) {
            REQUIRE(x.size() == y.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                CHECK(x[i].user == y[i].user);
                REQUIRE(x[i].checkins.size() == y[i].checkins.size());
                for (std::size_t j = 0; j < x[i].checkins.size(); ++j) {
                    CHECK(x[i].checkins[j].poi == y[i].checkins[j].poi);
                    CHECK(x[i].checkins[j].time == y[i].checkins[j].time);
                    CHECK(x[i].checkins[j].local_tod == y[i].checkins[j].local_tod);
                }
            }
        };
        same(a.train, b.train);
        same(a.validation, b.validation);
        same(a.test, b.test);
    }
}
