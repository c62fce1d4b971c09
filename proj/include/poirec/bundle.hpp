#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "poirec/ingest.hpp"

namespace poirec {

struct DatasetStats {
    std::int64_t users = 0;
    std::int64_t pois = 0;
    std::int64_t categories = 0;
    std::int64_t checkins = 0;      // check-ins inside kept trajectories
    std::int64_t trajectories = 0;  // across all three splits
};

// Everything downstream commands need: the split trajectories, the id
// vocabulary, summary counts, and the configuration that produced them.
struct ProcessedBundle {
    SplitDataset splits;
    IdMaps id_maps;
    DatasetStats stats;
    std::map<std::string, std::string> config_echo;
};

DatasetStats compute_stats(const SplitDataset& splits, const IdMaps& id_maps);

// Versioned JSON, lossless for every field (doubles use shortest
// round-trip formatting).
void save_bundle(const ProcessedBundle& bundle, const std::string& path);
ProcessedBundle load_bundle(const std::string& path);

}  // namespace poirec
