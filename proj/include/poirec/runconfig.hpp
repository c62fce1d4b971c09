#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "poirec/model.hpp"
#include "poirec/train.hpp"

namespace poirec {

// Flat key=value run configuration. Precedence: command-line flags override
// file values override defaults. Unknown keys are rejected.
struct RunConfig {
    std::string dataset_path;
    std::string bundle_path;
    std::string checkpoint_path;
    std::string output_dir = ".";
    std::string time_format = "foursquare";  // or "epoch"

    TrainConfig train;

    std::int64_t user_dim = 16;
    std::int64_t timecat_dim = 16;
    std::int64_t heads = 4;
    std::int64_t layers = 2;
    std::vector<std::int64_t> gcn_hidden = {32};
    std::int64_t max_seq_len = 32;
    double leaky_slope = 0.2;
    bool unscaled_attention = false;

    std::vector<double> alpha_grid = {0.33, 0.50, 0.67};
    std::vector<double> beta_grid = {0.33, 0.50, 0.67};
};

// Applies one key=value pair; throws ConfigError on unknown keys or
// unparseable values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Reads a file of key=value lines; '#' starts a comment, blanks are skipped.
RunConfig load_run_config(const std::string& path);

// Canonical echo of every settable key. Feeding the echo back through
// apply_config_entry reproduces the config exactly.
std::map<std::string, std::string> run_config_echo(const RunConfig& cfg);

// Model dimensions for a vocabulary; n_features follows the feature layout
// (popularity [+ frequency] + lat + lon + category one-hot).
ModelConfig model_config_from(const RunConfig& cfg, std::int64_t n_pois, std::int64_t n_users,
                              std::int64_t n_categories);

}  // namespace poirec
