#include "poirec/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "poirec/bundle.hpp"
#include "poirec/checkpoint.hpp"
#include "poirec/common.hpp"
#include "poirec/metrics.hpp"
#include "poirec/popularity.hpp"
#include "poirec/runconfig.hpp"
#include "poirec/sweep.hpp"
#include "poirec/train.hpp"

namespace poirec {

namespace {

namespace fs = std::filesystem;

std::string dtos(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

fs::path artifact_path(const RunConfig& cfg, const std::string& explicit_path,
                       const std::string& default_name) {
    if (!explicit_path.empty()) return explicit_path;
    return fs::path(cfg.output_dir) / default_name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + path.string());
}

void ensure_output_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.output_dir);
}

ProcessedBundle load_bundle_for(const RunConfig& cfg) {
    return load_bundle(artifact_path(cfg, cfg.bundle_path, "bundle.json").string());
}

// The checkpoint's echoed configuration drives feature reconstruction, so an
// evaluation always sees the features the parameters were trained against.
RunConfig config_from_echo(const std::map<std::string, std::string>& echo) {
    RunConfig cfg;
    for (const auto& [key, value] : echo) apply_config_entry(cfg, key, value);
    return cfg;
}

void cmd_preprocess(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("preprocess needs dataset_path");
    std::ifstream in(cfg.dataset_path);
    if (!in) throw ConfigError("cannot open dataset " + cfg.dataset_path);
    ensure_output_dir(cfg);

    FormatDescriptor format;
    format.time_format = cfg.time_format;
    ParseResult parsed = parse_checkins(in, format);
    for (const auto& m : parsed.malformed) {
        std::cerr << cfg.dataset_path << ":" << m.line_no << ": skipped: " << m.reason << "\n";
    }
    std::vector<RawCheckInRecord> kept = filter_sparse(parsed.records);
    CheckInDataset dataset = build_dataset(kept);
    for (const auto& w : dataset.id_maps.warnings) std::cerr << "warning: " << w << "\n";

    ProcessedBundle bundle;
    bundle.splits = split_dataset(segment_trajectories(dataset));
    bundle.id_maps = std::move(dataset.id_maps);
    bundle.stats = compute_stats(bundle.splits, bundle.id_maps);
    bundle.config_echo = run_config_echo(cfg);

    const fs::path out = artifact_path(cfg, cfg.bundle_path, "bundle.json");
    save_bundle(bundle, out.string());

    std::cout << "users\tpois\tcategories\tcheckins\ttrajectories\n"
              << bundle.stats.users << "\t" << bundle.stats.pois << "\t"
              << bundle.stats.categories << "\t" << bundle.stats.checkins << "\t"
              << bundle.stats.trajectories << "\n";
    std::cerr << "bundle -> " << out.string() << "\n";
}

void cmd_popularity_report(const RunConfig& cfg) {
    ProcessedBundle bundle = load_bundle_for(cfg);
    ensure_output_dir(cfg);

    PopularityTable table;
    if (cfg.train.frequency_popularity) {
        table = frequency_table(bundle.splits.train, bundle.id_maps);
    } else {
        PopularityParams params;
        params.alpha = cfg.train.alpha;
        params.beta = cfg.train.beta;
        params.recency_window = cfg.train.recency_window_days * 86400;
        params.reference_time = max_train_time(bundle.splits.train);
        table = popularity_table(bundle.splits.train, bundle.id_maps, params);
    }

    std::string tsv =
        "poi\tc_user_recent\tc_checkin_recent\tc_user_past\tc_checkin_past"
        "\traw_score\tnormalized_score\n";
    for (std::size_t i = 0; i < table.pois.size(); ++i) {
        const std::int64_t poi = table.pois[i];
        const PopularityCounts& c = table.counts[i];
        tsv += bundle.id_maps.poi_ids[static_cast<std::size_t>(poi)];
        tsv += "\t" + std::to_string(c.c_user_recent);
        tsv += "\t" + std::to_string(c.c_checkin_recent);
        tsv += "\t" + std::to_string(c.c_user_past);
        tsv += "\t" + std::to_string(c.c_checkin_past);
        tsv += "\t" + dtos(table.raw[i]);
        tsv += "\t" + dtos(table.normalized[i]);
        tsv += "\n";
    }
    const fs::path out = fs::path(cfg.output_dir) / "popularity.tsv";
    write_text(out, tsv);
    std::cout << "popularity table: " << table.pois.size() << " pois -> " << out.string() << "\n";
}

void cmd_train(const RunConfig& cfg) {
    ProcessedBundle bundle = load_bundle_for(cfg);
    ensure_output_dir(cfg);
    cfg.train.validate();

    ModelConfig model_cfg = model_config_from(cfg, bundle.id_maps.n_pois(),
                                              bundle.id_maps.n_users(),
                                              bundle.id_maps.n_categories());
    GetNextModel model(model_cfg);
    model.init_parameters(cfg.train.seed);
    TrainResult result = train(model, bundle.splits, bundle.id_maps, cfg.train);

    const fs::path ckpt = artifact_path(cfg, cfg.checkpoint_path, "checkpoint.json");
    save_checkpoint(ckpt.string(), model, run_config_echo(cfg));
    write_text(fs::path(cfg.output_dir) / "train_log.jsonl", epoch_log_jsonl(result.trace));

    std::cout << "trained " << result.trace.size() << " epochs; best validation mrr "
              << dtos(result.best_val_mrr) << " at epoch " << result.best_epoch
              << "; checkpoint -> " << ckpt.string() << "\n";
}

void cmd_evaluate(const RunConfig& cfg) {
    ProcessedBundle bundle = load_bundle_for(cfg);
    ensure_output_dir(cfg);

    const fs::path ckpt_path = artifact_path(cfg, cfg.checkpoint_path, "checkpoint.json");
    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path.string());
    RunConfig train_time_cfg = config_from_echo(ckpt.config_echo);

    PipelineInputs inputs =
        build_pipeline_inputs(bundle.splits.train, bundle.id_maps, train_time_cfg.train);
    MetricsReport report = evaluate(ckpt.model, bundle.splits.test, inputs,
                                    cfg.train.eval_unit_last, MetricsReport::default_k_list(),
                                    train_time_cfg.train.time_target_interval);
    report.alpha = train_time_cfg.train.alpha;
    report.beta = train_time_cfg.train.beta;

    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : report.acc_at) metrics["acc@" + std::to_string(k)] = v;
    metrics["mrr"] = report.mrr;
    metrics["n_samples"] = report.n_samples;
    metrics["alpha"] = report.alpha;
    metrics["beta"] = report.beta;
    nlohmann::json doc = {{"format_version", 1},
                          {"kind", "metrics"},
                          {"config", run_config_echo(cfg)},
                          {"checkpoint_config", ckpt.config_echo},
                          {"metrics", metrics}};
    const fs::path out = fs::path(cfg.output_dir) / "metrics.json";
    write_text(out, doc.dump() + "\n");

    std::cout << "test";
    for (const auto& [k, v] : report.acc_at) std::cout << " acc@" << k << "=" << dtos(v);
    std::cout << " mrr=" << dtos(report.mrr) << " n=" << report.n_samples << "\n";
    std::cerr << "metrics -> " << out.string() << "\n";
}

void cmd_sweep(const RunConfig& cfg) {
    ProcessedBundle bundle = load_bundle_for(cfg);
    ensure_output_dir(cfg);
    cfg.train.validate();

    ModelConfig model_cfg = model_config_from(cfg, bundle.id_maps.n_pois(),
                                              bundle.id_maps.n_users(),
                                              bundle.id_maps.n_categories());
    SweepResult result = sweep(bundle.splits, bundle.id_maps, cfg.alpha_grid, cfg.beta_grid,
                               cfg.train, model_cfg);

    const std::string table = sweep_table_tsv(result);
    write_text(fs::path(cfg.output_dir) / "sweep.tsv", table);
    write_text(fs::path(cfg.output_dir) / "sweep_log.jsonl", sweep_epoch_log_jsonl(result));
    std::cout << table;
    std::cerr << "sweep table -> " << (fs::path(cfg.output_dir) / "sweep.tsv").string() << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"next point-of-interest recommendation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    double alpha = 0.0, beta = 0.0;
    std::int64_t epochs = 0;
    std::string out_dir;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--alpha", alpha, "popularity alpha override");
    app.add_option("--beta", beta, "popularity beta override");
    app.add_option("--epochs", epochs, "epoch count override");
    app.add_option("--out", out_dir, "output directory override");

    CLI::App* sub_preprocess =
        app.add_subcommand("preprocess", "parse, filter, segment, split, and bundle a log");
    CLI::App* sub_popularity =
        app.add_subcommand("popularity-report", "per-POI score table from the bundle");
    CLI::App* sub_train = app.add_subcommand("train", "train a model on the bundle");
    CLI::App* sub_evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test split");
    CLI::App* sub_sweep = app.add_subcommand("sweep", "alpha/beta grid plus frequency baseline");
    for (CLI::App* sub : {sub_preprocess, sub_popularity, sub_train, sub_evaluate, sub_sweep}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_run_config(config_path);
        if (app.count("--seed") > 0) apply_config_entry(cfg, "seed", std::to_string(seed));
        if (app.count("--alpha") > 0) apply_config_entry(cfg, "alpha", dtos(alpha));
        if (app.count("--beta") > 0) apply_config_entry(cfg, "beta", dtos(beta));
        if (app.count("--epochs") > 0) apply_config_entry(cfg, "epochs", std::to_string(epochs));
        if (app.count("--out") > 0) apply_config_entry(cfg, "output_dir", out_dir);

        if (sub_preprocess->parsed()) cmd_preprocess(cfg);
        else if (sub_popularity->parsed()) cmd_popularity_report(cfg);
        else if (sub_train->parsed()) cmd_train(cfg);
        else if (sub_evaluate->parsed()) cmd_evaluate(cfg);
        else if (sub_sweep->parsed()) cmd_sweep(cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace poirec
