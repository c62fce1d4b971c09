#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poirec/ingest.hpp"
#include "poirec/metrics.hpp"
#include "poirec/model.hpp"
#include "poirec/train.hpp"

namespace poirec {

struct SweepRow {
    double alpha = 0.0;
    double beta = 0.0;
    MetricsReport report;
};

struct SweepResult {
    MetricsReport baseline_row;   // frequency-only popularity feature
    std::vector<SweepRow> rows;   // alpha-major over the grid cross product
    std::vector<std::vector<EpochRecord>> epoch_logs;  // baseline first, then grid order
};

// Trains one model per grid cell plus the frequency baseline, all from the
// same seed and template config, rebuilding popularity-dependent features per
// cell, and scores each on the test split.
SweepResult sweep(const SplitDataset& split, const IdMaps& id_maps,
                  const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid,
                  const TrainConfig& base_cfg, const ModelConfig& model_cfg);

// Header alpha/beta/acc@1/acc@5/acc@10/acc@20/mrr; the baseline row comes
// first with both grid columns spelled "baseline"; metrics fixed to 4
// decimals.
std::string sweep_table_tsv(const SweepResult& result);

// Concatenated per-epoch records of every run in table order.
std::string sweep_epoch_log_jsonl(const SweepResult& result);

}  // namespace poirec
