#include "poirec/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "poirec/common.hpp"
#include "poirec/nn/optim.hpp"
#include "poirec/nn/tape.hpp"

namespace poirec {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail("learning_rate must be finite and > 0");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must be in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must be in [0, 1]");
    if (recency_window_days < 1) fail("recency_window_days must be >= 1");
}

PipelineInputs build_pipeline_inputs(const std::vector<Trajectory>& train, const IdMaps& id_maps,
                                     const TrainConfig& cfg) {
    if (train.empty()) throw DataError("pipeline inputs need a nonempty train split");
    PipelineInputs out;
    if (cfg.frequency_popularity) {
        out.popularity = frequency_table(train, id_maps);
    } else {
        PopularityParams params;
        params.alpha = cfg.alpha;
        params.beta = cfg.beta;
        params.recency_window = cfg.recency_window_days * 86400;
        params.reference_time = max_train_time(train);
        out.popularity = popularity_table(train, id_maps, params);
    }
    out.flow_map = build_flow_map(train, id_maps, out.popularity);
    out.features = feature_matrix(out.flow_map, id_maps.n_categories(), cfg.include_freq_feature);
    out.adjacency = normalized_adjacency(out.flow_map);
    return out;
}

std::vector<std::vector<SequenceExample>> make_training_examples(
    const std::vector<Trajectory>& trajectories, const std::vector<NodeAttrs>& node_attrs,
    std::int64_t max_seq_len, std::int64_t batch_size, bool time_target_interval) {
    if (max_seq_len < 2) throw ConfigError("max_seq_len must be >= 2 to supervise anything");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");

    auto category_of = [&node_attrs](std::int64_t poi) {
        if (poi < 0 || poi >= static_cast<std::int64_t>(node_attrs.size())) {
            throw ShapeError("POI " + std::to_string(poi) + " has no node attributes");
        }
        return node_attrs[static_cast<std::size_t>(poi)].category;
    };

    std::vector<SequenceExample> examples;
    examples.reserve(trajectories.size());
    for (const auto& t : trajectories) {
        const std::int64_t m = static_cast<std::int64_t>(t.checkins.size());
        if (m < 2) throw DataError("trajectory shorter than 2 check-ins cannot be supervised");
        const std::int64_t keep = std::min(m, max_seq_len);
        const std::int64_t first = m - keep;

        SequenceExample ex;
        ex.user = t.user;
        for (std::int64_t i = first; i + 1 < m; ++i) {
            const CheckIn& cur = t.checkins[static_cast<std::size_t>(i)];
            const CheckIn& nxt = t.checkins[static_cast<std::size_t>(i + 1)];
            ex.input_pois.push_back(cur.poi);
            ex.input_categories.push_back(category_of(cur.poi));
            ex.input_times.push_back(cur.local_tod);
            ex.targets.poi.push_back(nxt.poi);
            ex.targets.category.push_back(category_of(nxt.poi));
            ex.targets.time.push_back(time_target_interval
                                          ? static_cast<double>(nxt.time - cur.time) / 86400.0
                                          : nxt.local_tod);
            ex.targets.mask.push_back(1.0);
        }
        examples.push_back(std::move(ex));
    }

    std::vector<std::vector<SequenceExample>> batches;
    for (std::size_t b = 0; b < examples.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(examples.size(), b + static_cast<std::size_t>(batch_size));
        std::vector<SequenceExample> batch(examples.begin() + static_cast<std::ptrdiff_t>(b),
                                           examples.begin() + static_cast<std::ptrdiff_t>(end));
        std::int64_t longest = 0;
        for (const auto& ex : batch) longest = std::max(longest, ex.length());
        for (auto& ex : batch) {
            while (ex.length() < longest) {
                ex.input_pois.push_back(0);
                ex.input_categories.push_back(0);
                ex.input_times.push_back(0.0);
                ex.targets.poi.push_back(0);
                ex.targets.category.push_back(0);
                ex.targets.time.push_back(0.0);
                ex.targets.mask.push_back(0.0);
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

TrainResult train(GetNextModel& model, const SplitDataset& split, const IdMaps& id_maps,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (split.train.empty()) throw DataError("train split is empty");

    TrainResult result;
    result.inputs = build_pipeline_inputs(split.train, id_maps, cfg);

    std::vector<nn::Parameter*> params = model.parameters();
    nn::Adam optimizer(params, cfg.learning_rate);
    Rng rng(cfg.seed);

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<nn::Tensor> best_values;
    double best_mrr = 0.0;
    std::int64_t best_epoch = 0;

    for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        std::vector<Trajectory> shuffled;
        shuffled.reserve(order.size());
        for (std::size_t i : order) shuffled.push_back(split.train[i]);

        auto batches = make_training_examples(shuffled, result.inputs.flow_map.node_attrs,
                                              model.config().max_seq_len, cfg.batch_size,
                                              cfg.time_target_interval);

        double loss_sum = 0.0;
        std::int64_t position_count = 0;
        for (const auto& batch : batches) {
            nn::Tape tape;
            nn::Var gcn = gcn_forward(tape, result.inputs.features, result.inputs.adjacency,
                                      model);
            nn::Var phi = transition_attention(tape, result.inputs.features,
                                               result.inputs.flow_map, model);
            nn::Var loss = batch_loss(tape, batch, model, gcn, phi);

            std::int64_t batch_valid = 0;
            for (const auto& ex : batch) batch_valid += ex.n_valid();
            loss_sum += tape.value(loss).item() * static_cast<double>(batch_valid);
            position_count += batch_valid;

            optimizer.zero_grad();
            tape.backward(loss);
            optimizer.step();
        }

        EpochRecord record;
        record.epoch = epoch;
        record.mean_loss = loss_sum / static_cast<double>(position_count);
        if (!std::isfinite(record.mean_loss)) {
            throw DivergenceError("epoch " + std::to_string(epoch) + " mean loss is not finite");
        }

        if (!split.validation.empty()) {
            MetricsReport val = evaluate(model, split.validation, result.inputs,
                                         cfg.eval_unit_last, MetricsReport::default_k_list(),
                                         cfg.time_target_interval);
            record.val_mrr = val.mrr;
        }
        result.trace.push_back(record);

        if (record.val_mrr > best_mrr) {
            best_mrr = record.val_mrr;
            best_epoch = epoch;
            best_values.clear();
            for (nn::Parameter* p : params) best_values.push_back(p->value);
        }
    }

    if (best_epoch > 0) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
        result.best_epoch = best_epoch;
        result.best_val_mrr = best_mrr;
    } else {
        // No validation signal: keep the final parameters.
        result.best_epoch = cfg.epochs;
        result.best_val_mrr = 0.0;
    }
    return result;
}

MetricsReport evaluate(GetNextModel& model, const std::vector<Trajectory>& trajectories,
                       const PipelineInputs& inputs, bool eval_unit_last,
                       const std::vector<std::int64_t>& k_list, bool time_target_interval) {
    if (trajectories.empty()) throw DataError("evaluate: no trajectories");

    nn::Tensor gcn_values, phi_values;
    {
        nn::Tape tape;
        gcn_values = tape.value(gcn_forward(tape, inputs.features, inputs.adjacency, model));
        phi_values = tape.value(
            transition_attention(tape, inputs.features, inputs.flow_map, model));
    }

    auto batches = make_training_examples(trajectories, inputs.flow_map.node_attrs,
                                          model.config().max_seq_len, 1, time_target_interval);

    std::vector<std::int64_t> ranks;
    for (const auto& batch : batches) {
        const SequenceExample& ex = batch.front();
        nn::Tape tape;
        nn::Var logits = sequence_logits(tape, ex, model, tape.constant(gcn_values),
                                         tape.constant(phi_values));
        const nn::Tensor& scores = tape.value(logits);
        const std::int64_t k = ex.length();
        const std::int64_t start = eval_unit_last ? k - 1 : 0;
        for (std::int64_t i = start; i < k; ++i) {
            if (ex.targets.mask[static_cast<std::size_t>(i)] == 0.0) continue;
            std::vector<double> row(static_cast<std::size_t>(scores.cols()));
            for (std::int64_t j = 0; j < scores.cols(); ++j) {
                row[static_cast<std::size_t>(j)] = scores.at(i, j);
            }
            ranks.push_back(rank_of_target(row, ex.targets.poi[static_cast<std::size_t>(i)]));
        }
    }
    if (ranks.empty()) throw DataError("evaluate: no valid samples");
    return compute_report(ranks, k_list);
}

std::string epoch_log_jsonl(const std::vector<EpochRecord>& trace) {
    std::ostringstream out;
    for (const auto& r : trace) {
        nlohmann::json line = {{"epoch", r.epoch},
                               {"mean_loss", r.mean_loss},
                               {"val_mrr", r.val_mrr}};
        out << line.dump() << "\n";
    }
    return out.str();
}

}  // namespace poirec
