#include "poirec/runconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "poirec/common.hpp"

namespace poirec {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ConfigError("config key " + key + " has unparseable value '" + value + "'");
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value);
    return out;
}

double parse_f64(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value);
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
    std::vector<T> out;
    if (trim(value).empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse(key, trim(item)));
    return out;
}

std::string dtos(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string join_i64(const std::vector<std::int64_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_f64(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += dtos(v[i]);
    }
    return out;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset_path") cfg.dataset_path = value;
    else if (key == "bundle_path") cfg.bundle_path = value;
    else if (key == "checkpoint_path") cfg.checkpoint_path = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "time_format") {
        if (value != "foursquare" && value != "epoch") bad_value(key, value);
        cfg.time_format = value;
    } else if (key == "epochs") cfg.train.epochs = parse_int<std::int64_t>(key, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_int<std::int64_t>(key, value);
    else if (key == "learning_rate") cfg.train.learning_rate = parse_f64(key, value);
    else if (key == "seed") cfg.train.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "alpha") cfg.train.alpha = parse_f64(key, value);
    else if (key == "beta") cfg.train.beta = parse_f64(key, value);
    else if (key == "recency_window_days") {
        cfg.train.recency_window_days = parse_int<std::int64_t>(key, value);
    } else if (key == "frequency_popularity") {
        cfg.train.frequency_popularity = parse_bool(key, value);
    } else if (key == "include_freq_feature") {
        cfg.train.include_freq_feature = parse_bool(key, value);
    } else if (key == "time_target_interval") {
        cfg.train.time_target_interval = parse_bool(key, value);
    } else if (key == "eval_unit_last") cfg.train.eval_unit_last = parse_bool(key, value);
    else if (key == "user_dim") cfg.user_dim = parse_int<std::int64_t>(key, value);
    else if (key == "timecat_dim") cfg.timecat_dim = parse_int<std::int64_t>(key, value);
    else if (key == "heads") cfg.heads = parse_int<std::int64_t>(key, value);
    else if (key == "layers") cfg.layers = parse_int<std::int64_t>(key, value);
    else if (key == "gcn_hidden") {
        cfg.gcn_hidden = parse_list<std::int64_t>(key, value, parse_int<std::int64_t>);
    } else if (key == "max_seq_len") cfg.max_seq_len = parse_int<std::int64_t>(key, value);
    else if (key == "leaky_slope") cfg.leaky_slope = parse_f64(key, value);
    else if (key == "unscaled_attention") cfg.unscaled_attention = parse_bool(key, value);
    else if (key == "alpha_grid") cfg.alpha_grid = parse_list<double>(key, value, parse_f64);
    else if (key == "beta_grid") cfg.beta_grid = parse_list<double>(key, value, parse_f64);
    else throw ConfigError("unknown config key: " + key);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

std::map<std::string, std::string> run_config_echo(const RunConfig& cfg) {
    std::map<std::string, std::string> echo;
    echo["dataset_path"] = cfg.dataset_path;
    echo["bundle_path"] = cfg.bundle_path;
    echo["checkpoint_path"] = cfg.checkpoint_path;
    echo["output_dir"] = cfg.output_dir;
    echo["time_format"] = cfg.time_format;
    echo["epochs"] = std::to_string(cfg.train.epochs);
    echo["batch_size"] = std::to_string(cfg.train.batch_size);
    echo["learning_rate"] = dtos(cfg.train.learning_rate);
    echo["seed"] = std::to_string(cfg.train.seed);
    echo["alpha"] = dtos(cfg.train.alpha);
    echo["beta"] = dtos(cfg.train.beta);
    echo["recency_window_days"] = std::to_string(cfg.train.recency_window_days);
    echo["frequency_popularity"] = cfg.train.frequency_popularity ? "true" : "false";
    echo["include_freq_feature"] = cfg.train.include_freq_feature ? "true" : "false";
    echo["time_target_interval"] = cfg.train.time_target_interval ? "true" : "false";
    echo["eval_unit_last"] = cfg.train.eval_unit_last ? "true" : "false";
    echo["user_dim"] = std::to_string(cfg.user_dim);
    echo["timecat_dim"] = std::to_string(cfg.timecat_dim);
    echo["heads"] = std::to_string(cfg.heads);
    echo["layers"] = std::to_string(cfg.layers);
    echo["gcn_hidden"] = join_i64(cfg.gcn_hidden);
    echo["max_seq_len"] = std::to_string(cfg.max_seq_len);
    echo["leaky_slope"] = dtos(cfg.leaky_slope);
    echo["unscaled_attention"] = cfg.unscaled_attention ? "true" : "false";
    echo["alpha_grid"] = join_f64(cfg.alpha_grid);
    echo["beta_grid"] = join_f64(cfg.beta_grid);
    return echo;
}

ModelConfig model_config_from(const RunConfig& cfg, std::int64_t n_pois, std::int64_t n_users,
                              std::int64_t n_categories) {
    ModelConfig mc;
    mc.user_dim = cfg.user_dim;
    mc.timecat_dim = cfg.timecat_dim;
    mc.model_dim = 2 * cfg.user_dim + 2 * cfg.timecat_dim;
    mc.heads = cfg.heads;
    mc.layers = cfg.layers;
    mc.gcn_hidden = cfg.gcn_hidden;
    mc.n_features = (cfg.train.include_freq_feature ? 4 : 3) + n_categories;
    mc.n_pois = n_pois;
    mc.n_users = n_users;
    mc.n_categories = n_categories;
    mc.max_seq_len = cfg.max_seq_len;
    mc.leaky_slope = cfg.leaky_slope;
    mc.unscaled_attention = cfg.unscaled_attention;
    return mc;
}

}  // namespace poirec
