#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poirec/ingest.hpp"

namespace poirec::testsupport {

// Next stop after POI i in the synthetic log: (5i + 1) mod 12 is a
// permutation of 0..11 made of three disjoint 4-cycles, so the transition
// structure is fully deterministic and learnable.
constexpr std::int64_t markov_next(std::int64_t i) { return (5 * i + 1) % 12; }

// Four-user check-in log over twelve POIs following markov_next. Trajectory
// j belongs to user j % 4, starts at 1.6e9 + j * 43200 seconds, is 4 to 8
// check-ins long at one-hour spacing, and opens at a seeded random POI.
// Same-user trajectories are two days apart, so 24h segmentation recovers
// them exactly, and every POI/user count clears the sparsity thresholds.
std::vector<RawCheckInRecord> markov_records(int n_trajectories = 300, std::uint64_t seed = 7);

// The records rendered as the tab-separated log format with epoch times.
std::string markov_tsv(int n_trajectories = 300, std::uint64_t seed = 7);

struct MarkovDataset {
    SplitDataset split;
    IdMaps id_maps;
};

// markov_records pushed through the real pipeline: sparsity filter, id
// assignment, 24h segmentation, 80/10/10 chronological split.
MarkovDataset markov_dataset(int n_trajectories = 300, std::uint64_t seed = 7);

}  // namespace poirec::testsupport
