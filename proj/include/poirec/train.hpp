#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poirec/flowmap.hpp"
#include "poirec/ingest.hpp"
#include "poirec/metrics.hpp"
#include "poirec/model.hpp"
#include "poirec/popularity.hpp"

namespace poirec {

struct TrainConfig {
    std::int64_t epochs = 20;
    std::int64_t batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    double alpha = 0.5;
    double beta = 0.5;
    std::int64_t recency_window_days = 90;
    bool frequency_popularity = false;   // score POIs by raw check-in frequency instead
    bool include_freq_feature = false;   // add the frequency column next to popularity
    bool time_target_interval = false;   // supervise the normalized gap, not the next time-of-day
    bool eval_unit_last = false;         // rank only each trajectory's final transition

    void validate() const;  // throws ConfigError
};

// Everything a forward pass needs besides the parameters. Rebuilt whenever
// alpha/beta change because the popularity feature feeds the node attributes.
struct PipelineInputs {
    FlowMap flow_map;
    FeatureMatrix features;
    NormalizedAdjacency adjacency;
    PopularityTable popularity;
};

PipelineInputs build_pipeline_inputs(const std::vector<Trajectory>& train, const IdMaps& id_maps,
                                     const TrainConfig& cfg);

// Next-step supervision: inputs are check-ins 1..m-1 (most recent max_seq_len
// kept first), targets are check-ins 2..m. Batches are consecutive groups
// padded to their longest member; padded slots carry mask 0.
std::vector<std::vector<SequenceExample>> make_training_examples(
    const std::vector<Trajectory>& trajectories, const std::vector<NodeAttrs>& node_attrs,
    std::int64_t max_seq_len, std::int64_t batch_size, bool time_target_interval);

struct EpochRecord {
    std::int64_t epoch = 0;  // 1-based
    double mean_loss = 0.0;  // mean over every supervised position in the epoch
    double val_mrr = 0.0;    // 0 when the validation split has no usable samples
};

struct TrainResult {
    std::vector<EpochRecord> trace;
    std::int64_t best_epoch = 0;  // epoch whose parameters the model ends with
    double best_val_mrr = 0.0;
    PipelineInputs inputs;
};

// Minibatch training on the combined loss; deterministic under cfg.seed.
// The model is left holding the parameters of the epoch with the highest
// validation mean reciprocal rank (earliest on ties; final epoch when the
// validation split yields no samples). Throws DivergenceError when an epoch
// mean loss is non-finite.
TrainResult train(GetNextModel& model, const SplitDataset& split, const IdMaps& id_maps,
                  const TrainConfig& cfg);

// Ranks the true next POI at every supervised position (or only the final
// one per trajectory) and aggregates. Throws DataError when no trajectory
// yields a sample. alpha/beta in the report are left to the caller.
MetricsReport evaluate(GetNextModel& model, const std::vector<Trajectory>& trajectories,
                       const PipelineInputs& inputs, bool eval_unit_last = false,
                       const std::vector<std::int64_t>& k_list = MetricsReport::default_k_list(),
                       bool time_target_interval = false);

// One JSON object per line: {"epoch":..,"mean_loss":..,"val_mrr":..}.
std::string epoch_log_jsonl(const std::vector<EpochRecord>& trace);

}  // namespace poirec
