#include "poirec/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "poirec/common.hpp"

namespace poirec {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json config_to_json(const ModelConfig& c) {
    return json{{"user_dim", c.user_dim},
                {"timecat_dim", c.timecat_dim},
                {"model_dim", c.model_dim},
                {"heads", c.heads},
                {"layers", c.layers},
                {"gcn_hidden", c.gcn_hidden},
                {"n_features", c.n_features},
                {"n_pois", c.n_pois},
                {"n_users", c.n_users},
                {"n_categories", c.n_categories},
                {"max_seq_len", c.max_seq_len},
                {"leaky_slope", c.leaky_slope},
                {"unscaled_attention", c.unscaled_attention}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.user_dim = j.at("user_dim").get<std::int64_t>();
    c.timecat_dim = j.at("timecat_dim").get<std::int64_t>();
    c.model_dim = j.at("model_dim").get<std::int64_t>();
    c.heads = j.at("heads").get<std::int64_t>();
    c.layers = j.at("layers").get<std::int64_t>();
    c.gcn_hidden = j.at("gcn_hidden").get<std::vector<std::int64_t>>();
    c.n_features = j.at("n_features").get<std::int64_t>();
    c.n_pois = j.at("n_pois").get<std::int64_t>();
    c.n_users = j.at("n_users").get<std::int64_t>();
    c.n_categories = j.at("n_categories").get<std::int64_t>();
    c.max_seq_len = j.at("max_seq_len").get<std::int64_t>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.unscaled_attention = j.at("unscaled_attention").get<bool>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, GetNextModel& model,
                     const std::map<std::string, std::string>& config_echo) {
    json params = json::object();
    for (auto& [name, p] : model.named_parameters()) {
        params[name] = json{{"rows", p->value.rows()},
                            {"cols", p->value.cols()},
                            {"data", p->value.data()}};
    }
    json doc = {{"format_version", kCheckpointVersion},
                {"kind", "checkpoint"},
                {"config", config_echo},
                {"model_config", config_to_json(model.config())},
                {"parameters", std::move(params)}};
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint to " + path);
    out << doc.dump() << "\n";
    if (!out) throw ConfigError("write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + " is not valid JSON: " + e.what());
    }
    try {
        if (doc.at("kind").get<std::string>() != "checkpoint" ||
            doc.at("format_version").get<int>() != kCheckpointVersion) {
            throw DataError("checkpoint " + path + " has an unsupported kind or version");
        }
        LoadedCheckpoint loaded{GetNextModel(config_from_json(doc.at("model_config"))),
                                doc.at("config").get<std::map<std::string, std::string>>()};
        const json& params = doc.at("parameters");
        std::size_t consumed = 0;
        for (auto& [name, p] : loaded.model.named_parameters()) {
            if (!params.contains(name)) {
                throw DataError("checkpoint " + path + " lacks parameter " + name);
            }
            const json& jp = params.at(name);
            if (jp.at("rows").get<std::int64_t>() != p->value.rows() ||
                jp.at("cols").get<std::int64_t>() != p->value.cols()) {
                throw DataError("checkpoint " + path + " parameter " + name + " has wrong shape");
            }
            p->value.data() = jp.at("data").get<std::vector<double>>();
            ++consumed;
        }
        if (consumed != params.size()) {
            throw DataError("checkpoint " + path + " carries unknown parameters");
        }
        return loaded;
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + " is missing fields: " + e.what());
    }
}

}  // namespace poirec
