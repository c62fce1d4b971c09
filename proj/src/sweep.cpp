#include "poirec/sweep.hpp"

#include <cstdio>
#include <sstream>

#include "poirec/common.hpp"

namespace poirec {

namespace {

struct CellOutcome {
    MetricsReport report;
    std::vector<EpochRecord> trace;
};

CellOutcome run_cell(const SplitDataset& split, const IdMaps& id_maps, const TrainConfig& cfg,
                     const ModelConfig& model_cfg) {
    GetNextModel model(model_cfg);
    model.init_parameters(cfg.seed);
    TrainResult trained = train(model, split, id_maps, cfg);
    CellOutcome out;
    out.report = evaluate(model, split.test, trained.inputs, cfg.eval_unit_last,
                          MetricsReport::default_k_list(), cfg.time_target_interval);
    out.report.alpha = cfg.alpha;
    out.report.beta = cfg.beta;
    out.trace = std::move(trained.trace);
    return out;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

void append_metrics(std::ostringstream& out, const MetricsReport& r) {
    for (std::int64_t k : MetricsReport::default_k_list()) {
        out << "\t" << fixed(r.acc_at.at(k), 4);
    }
    out << "\t" << fixed(r.mrr, 4) << "\n";
}

}  // namespace

SweepResult sweep(const SplitDataset& split, const IdMaps& id_maps,
                  const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid,
                  const TrainConfig& base_cfg, const ModelConfig& model_cfg) {
    if (alpha_grid.empty() || beta_grid.empty()) throw ConfigError("sweep grids must be nonempty");

    SweepResult result;

    TrainConfig baseline_cfg = base_cfg;
    baseline_cfg.frequency_popularity = true;
    CellOutcome baseline = run_cell(split, id_maps, baseline_cfg, model_cfg);
    result.baseline_row = baseline.report;
    result.epoch_logs.push_back(std::move(baseline.trace));

    for (double alpha : alpha_grid) {
        for (double beta : beta_grid) {
            TrainConfig cfg = base_cfg;
            cfg.frequency_popularity = false;
            cfg.alpha = alpha;
            cfg.beta = beta;
            CellOutcome cell = run_cell(split, id_maps, cfg, model_cfg);
            SweepRow row;
            row.alpha = alpha;
            row.beta = beta;
            row.report = std::move(cell.report);
            result.rows.push_back(std::move(row));
            result.epoch_logs.push_back(std::move(cell.trace));
        }
    }
    return result;
}

std::string sweep_table_tsv(const SweepResult& result) {
    std::ostringstream out;
    out << "alpha\tbeta\tacc@1\tacc@5\tacc@10\tacc@20\tmrr\n";
    out << "baseline\tbaseline";
    append_metrics(out, result.baseline_row);
    for (const auto& row : result.rows) {
        out << fixed(row.alpha, 2) << "\t" << fixed(row.beta, 2);
        append_metrics(out, row.report);
    }
    return out.str();
}

std::string sweep_epoch_log_jsonl(const SweepResult& result) {
    std::string out;
    for (const auto& trace : result.epoch_logs) out += epoch_log_jsonl(trace);
    return out;
}

}  // namespace poirec
