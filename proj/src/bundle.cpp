#include "poirec/bundle.hpp"

#include <fstream>

#include <json.hpp>

#include "poirec/common.hpp"

namespace poirec {

namespace {

using nlohmann::json;

constexpr int kBundleVersion = 1;

json trajectories_to_json(const std::vector<Trajectory>& trajectories) {
    json out = json::array();
    for (const auto& t : trajectories) {
        json checkins = json::array();
        for (const auto& c : t.checkins) {
            checkins.push_back(json::array({c.user, c.poi, c.time, c.local_tod}));
        }
        out.push_back(json{{"user", t.user}, {"checkins", std::move(checkins)}});
    }
    return out;
}

std::vector<Trajectory> trajectories_from_json(const json& arr) {
    std::vector<Trajectory> out;
    for (const auto& jt : arr) {
        Trajectory t;
        t.user = jt.at("user").get<std::int64_t>();
        for (const auto& jc : jt.at("checkins")) {
            CheckIn c;
            c.user = jc.at(0).get<std::int64_t>();
            c.poi = jc.at(1).get<std::int64_t>();
            c.time = jc.at(2).get<std::int64_t>();
            c.local_tod = jc.at(3).get<double>();
            t.checkins.push_back(c);
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

DatasetStats compute_stats(const SplitDataset& splits, const IdMaps& id_maps) {
    DatasetStats s;
    s.users = id_maps.n_users();
    s.pois = id_maps.n_pois();
    s.categories = id_maps.n_categories();
    for (const auto* part : {&splits.train, &splits.validation, &splits.test}) {
        s.trajectories += static_cast<std::int64_t>(part->size());
        for (const auto& t : *part) s.checkins += static_cast<std::int64_t>(t.checkins.size());
    }
    return s;
}

void save_bundle(const ProcessedBundle& bundle, const std::string& path) {
    json meta = json::array();
    for (const auto& m : bundle.id_maps.poi_meta) {
        meta.push_back(json{{"category", m.category}, {"lat", m.lat}, {"lon", m.lon}});
    }
    json doc = {
        {"format_version", kBundleVersion},
        {"kind", "bundle"},
        {"config", bundle.config_echo},
        {"stats",
         {{"users", bundle.stats.users},
          {"pois", bundle.stats.pois},
          {"categories", bundle.stats.categories},
          {"checkins", bundle.stats.checkins},
          {"trajectories", bundle.stats.trajectories}}},
        {"id_maps",
         {{"user_ids", bundle.id_maps.user_ids},
          {"poi_ids", bundle.id_maps.poi_ids},
          {"category_ids", bundle.id_maps.category_ids},
          {"category_names", bundle.id_maps.category_names},
          {"poi_meta", std::move(meta)},
          {"warnings", bundle.id_maps.warnings}}},
        {"splits",
         {{"train", trajectories_to_json(bundle.splits.train)},
          {"validation", trajectories_to_json(bundle.splits.validation)},
          {"test", trajectories_to_json(bundle.splits.test)}}},
    };
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write bundle to " + path);
    out << doc.dump() << "\n";
    if (!out) throw ConfigError("write failed for " + path);
}

ProcessedBundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open bundle " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("bundle " + path + " is not valid JSON: " + e.what());
    }
    try {
        if (doc.at("kind").get<std::string>() != "bundle" ||
            doc.at("format_version").get<int>() != kBundleVersion) {
            throw DataError("bundle " + path + " has an unsupported kind or version");
        }
        ProcessedBundle b;
        b.config_echo = doc.at("config").get<std::map<std::string, std::string>>();
        const json& stats = doc.at("stats");
        b.stats.users = stats.at("users").get<std::int64_t>();
        b.stats.pois = stats.at("pois").get<std::int64_t>();
        b.stats.categories = stats.at("categories").get<std::int64_t>();
        b.stats.checkins = stats.at("checkins").get<std::int64_t>();
        b.stats.trajectories = stats.at("trajectories").get<std::int64_t>();
        const json& ids = doc.at("id_maps");
        b.id_maps.user_ids = ids.at("user_ids").get<std::vector<std::string>>();
        b.id_maps.poi_ids = ids.at("poi_ids").get<std::vector<std::string>>();
        b.id_maps.category_ids = ids.at("category_ids").get<std::vector<std::string>>();
        b.id_maps.category_names = ids.at("category_names").get<std::vector<std::string>>();
        for (const auto& jm : ids.at("poi_meta")) {
            PoiMeta m;
            m.category = jm.at("category").get<std::int64_t>();
            m.lat = jm.at("lat").get<double>();
            m.lon = jm.at("lon").get<double>();
            b.id_maps.poi_meta.push_back(m);
        }
        b.id_maps.warnings = ids.at("warnings").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < b.id_maps.user_ids.size(); ++i) {
            b.id_maps.user_index[b.id_maps.user_ids[i]] = static_cast<std::int64_t>(i);
        }
        for (std::size_t i = 0; i < b.id_maps.poi_ids.size(); ++i) {
            b.id_maps.poi_index[b.id_maps.poi_ids[i]] = static_cast<std::int64_t>(i);
        }
        for (std::size_t i = 0; i < b.id_maps.category_ids.size(); ++i) {
            b.id_maps.category_index[b.id_maps.category_ids[i]] = static_cast<std::int64_t>(i);
        }
        const json& splits = doc.at("splits");
        b.splits.train = trajectories_from_json(splits.at("train"));
        b.splits.validation = trajectories_from_json(splits.at("validation"));
        b.splits.test = trajectories_from_json(splits.at("test"));
        return b;
    } catch (const json::exception& e) {
        throw DataError("bundle " + path + " is missing fields: " + e.what());
    }
}

}  // namespace poirec
