#pragma once

#include <map>
#include <string>

#include "poirec/model.hpp"

namespace poirec {

// Versioned JSON: model dimensions, the run configuration echo, and every
// named parameter tensor. Values round-trip bit-exactly.
void save_checkpoint(const std::string& path, GetNextModel& model,
                     const std::map<std::string, std::string>& config_echo);

struct LoadedCheckpoint {
    GetNextModel model;
    std::map<std::string, std::string> config_echo;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace poirec
