// Command-line front end. Settings are layered: built-in defaults < --config
// file < SHMSSL_* environment variables < command-line flags.

#include "shmssl/error.hpp"
#include "shmssl/finetune.hpp"
#include "shmssl/harness.hpp"
#include "shmssl/reduction.hpp"
#include "shmssl/ssl.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace shmssl;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::Config: return 2;
        case ErrorKind::Io: return 3;
        case ErrorKind::Format: return 4;
        case ErrorKind::Input:
        case ErrorKind::MissingData:
        case ErrorKind::Dimension: return 5;
        case ErrorKind::Divergence: return 6;
        case ErrorKind::Numeric: return 7;
    }
    return 1;
}

// One line, no embedded newlines: "error kind=<kind> message=<text>".
void print_error(const char* kind, std::string message) {
    for (char& c : message)
        if (c == '\n' || c == '\r') c = ' ';
    std::fprintf(stderr, "error kind=%s message=%s\n", kind, message.c_str());
}

void log_line(const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); }

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config_file;
    std::string out;
};

ExperimentConfig resolve(const Globals& g, const KeyValues& cli) {
    KeyValues merged;
    if (!g.config_file.empty()) merge_into(merged, load_key_values(g.config_file));
    merge_into(merged, env_overrides(kEnvPrefix, setting_keys()));
    merge_into(merged, cli);
    if (g.seed) merged["seed"] = std::to_string(*g.seed);
    if (!g.out.empty()) merged["out"] = g.out;
    ExperimentConfig config = ExperimentConfig::desk();
    apply_settings(config, merged);
    return config;
}

Case case_of(std::size_t num_classes) {
    for (Case c : {Case::One, Case::Two})
        if (case_patterns(c).size() == num_classes) return c;
    throw ConfigError("no case has " + std::to_string(num_classes) + " classes");
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<LabeledSample> labeled(const FeatureFile& f, const std::string& what) {
    if (f.labels.empty()) throw InputError(what + ": feature file carries no labels");
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < f.features.size(); ++i) out.push_back({f.features[i], f.labels[i]});
    return out;
}

void save_labeled(const fs::path& path, std::span<const LabeledSample> samples) {
    write_features(path, features_of(samples), labels_of(samples));
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& cfg, std::size_t raw_per_class) {
    fs::create_directories(cfg.out_dir);
    const auto counts = scaled_counts(cfg.case_id, cfg.scale);
    const std::uint64_t data_seed = derive_seed(cfg.seed, "dataset");
    const auto samples = gen_dataset(cfg.case_id, counts, data_seed, cfg.data);
    save_labeled(cfg.out_dir / "dataset.ierfh", samples);
    const DatasetSplit split = split_dataset(samples, cfg.ratios, derive_seed(cfg.seed, "split"));
    save_labeled(cfg.out_dir / "label.ierfh", split.label);
    save_labeled(cfg.out_dir / "validation.ierfh", split.validation);
    save_labeled(cfg.out_dir / "test.ierfh", split.test);
    std::vector<FeatureVector> pool = features_of(split.label);
    for (const auto& s : split.validation) pool.push_back(s.feature);
    if (cfg.pool_all)
        for (const auto& s : split.test) pool.push_back(s.feature);
    write_features(cfg.out_dir / "pool.ierfh", pool);
    const auto low_shot = draw_low_shot(split.label, cfg.low_shots.front().counts, derive_seed(cfg.seed, "low-shot", 0),
                                        class_names(cfg.case_id));
    save_labeled(cfg.out_dir / "lowshot.ierfh", low_shot);

    if (raw_per_class > 0) {
        const fs::path raw = cfg.out_dir / "raw";
        fs::create_directories(raw);
        const auto names = class_names(cfg.case_id);
        for (std::size_t label = 0; label < names.size(); ++label) {
            for (std::size_t i = 0; i < std::min(raw_per_class, counts[label]); ++i) {
                const PatternSpec spec = dataset_segment_spec(cfg.case_id, label, i, data_seed, cfg.data);
                write_segment_csv(raw / (names[label] + "_" + std::to_string(i) + ".csv"), gen_segment(spec));
            }
        }
    }
    std::printf("samples=%zu label=%zu validation=%zu test=%zu pool=%zu lowshot=%zu out=%s\n", samples.size(),
                split.label.size(), split.validation.size(), split.test.size(), pool.size(), low_shot.size(),
                cfg.out_dir.string().c_str());
    return 0;
}

int cmd_reduce(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, double range_min,
               double range_max, double rate, const std::string& output) {
    std::vector<TimeSeriesSegment> segments;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        TimeSeriesSegment s = read_segment_csv(inputs[i], range_min, range_max);
        if (rate > 0.0) s.sample_rate_hz = rate;
        s.channel_id = static_cast<std::uint32_t>(i);
        if (detect_missing(s)) {
            log_line("warning: " + inputs[i] + " has " + std::to_string(s.samples.size()) + " of " +
                     std::to_string(s.expected_count()) + " samples; skipped as missing");
            ++skipped;
            continue;
        }
        segments.push_back(std::move(s));
    }
    const auto features = parallel::ierfh_batch(segments);
    const fs::path path = output.empty() ? cfg.out_dir / "features.ierfh" : fs::path(output);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_features(path, features);
    std::printf("reduced=%zu skipped=%zu out=%s\n", features.size(), skipped, path.string().c_str());
    return 0;
}

int cmd_pretrain(const ExperimentConfig& cfg, const std::string& method_text, const std::string& features_path) {
    const Method method = parse_method(method_text);
    const FeatureFile f = read_features(features_path);  // labels, if any, are ignored
    PretrainConfig pc;
    pc.method = method;
    pc.epochs = cfg.pretrain_epochs;
    pc.batch_size = cfg.batch_size;
    pc.lr = cfg.lr;
    pc.seed = derive_seed(cfg.seed, "pretrain", static_cast<std::uint64_t>(method));
    const PretrainResult r = pretrain(f.features, pc);
    fs::create_directories(cfg.out_dir);
    const std::string name = to_string(method);
    ModelBundle bundle = r.bundle;
    save_checkpoint(bundle, cfg.out_dir / (name + ".ckpt"));
    write_text_file(cfg.out_dir / (name + "_loss.csv"), loss_trace_csv(method, r.epoch_loss));
    std::printf("method=%s samples=%zu epochs=%d first_loss=%.6g last_loss=%.6g checkpoint=%s\n", name.c_str(),
                f.features.size(), pc.epochs, r.epoch_loss.empty() ? 0.0 : r.epoch_loss.front(),
                r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back(), (cfg.out_dir / (name + ".ckpt")).string().c_str());
    return 0;
}

int cmd_finetune(const ExperimentConfig& cfg, const std::string& checkpoint, const std::string& train_path,
                 const std::string& validation_path) {
    const auto train = labeled(read_features(train_path), train_path);
    const auto validation = labeled(read_features(validation_path), validation_path);
    const std::size_t k = case_patterns(cfg.case_id).size();
    const std::uint64_t seed = derive_seed(cfg.seed, "finetune", 0);
    FinetuneConfig fc;
    fc.batch_size = cfg.batch_size;
    fc.lr = cfg.lr;
    fc.seed = seed;
    ModelBundle start;
    if (checkpoint.empty() || checkpoint == "sup") {
        start = build_for_method(Method::Sup, k, seed);
        fc.epochs = cfg.sup_epochs;
    } else {
        start = transfer_encoder(load_checkpoint(checkpoint), k, seed);
        fc.epochs = cfg.finetune_epochs;
    }
    FinetuneResult r = finetune(std::move(start), train, validation, fc);
    for (const auto& w : r.warnings) log_line("warning: " + w);
    fs::create_directories(cfg.out_dir);
    save_checkpoint(r.model, cfg.out_dir / "classifier.ckpt");
    write_text_file(cfg.out_dir / "finetune_trace.csv", finetune_trace_csv(r.trace));
    std::printf("method=%s epochs=%d best_epoch=%d best_val_f1=%.6f checkpoint=%s\n", to_string(r.model.method),
                fc.epochs, r.best_epoch, r.best_val_f1, (cfg.out_dir / "classifier.ckpt").string().c_str());
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint, const std::string& features_path) {
    ModelBundle model = load_checkpoint(checkpoint);
    if (!model.has(net::kHead)) throw ConfigError(checkpoint + " is not a classifier checkpoint");
    const auto samples = labeled(read_features(features_path), features_path);
    const Evaluation ev = evaluate(model, samples, class_names(case_of(model.num_classes)));
    fs::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir / "confusion.csv", confusion_csv(ev.confusion));
    std::string per_class = "class,precision,recall,f1,support\n";
    const auto metrics = per_class_metrics(ev.confusion);
    char buf[160];
    for (std::size_t c = 0; c < metrics.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%llu\n", ev.confusion.class_names()[c].c_str(),
                      metrics[c].precision, metrics[c].recall, metrics[c].f1,
                      static_cast<unsigned long long>(metrics[c].support));
        per_class += buf;
    }
    write_text_file(cfg.out_dir / "per_class.csv", per_class);
    std::printf("samples=%zu accuracy=%.6f macro_f1=%.6f\n", samples.size(), ev.overall.accuracy, ev.overall.macro_f1);
    return 0;
}

int cmd_run(const ExperimentConfig& cfg) {
    const ResultTable table = run_experiment(cfg, log_line);
    std::fputs(report_grid_csv(table).c_str(), stdout);
    return 0;
}

int cmd_report(const Globals& g, const std::string& run_dir) {
    const ResultTable table = load_results(run_dir);
    const fs::path out = g.out.empty() ? fs::path(run_dir) : fs::path(g.out);
    emit_report(table, out);
    std::fputs(report_grid_csv(table).c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised anomaly classification for structural health monitoring data"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--config", g.config_file, "Flat key=value settings file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory");

    KeyValues cli;
    auto setting = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(flag, [&cli, key](const std::string& v) { cli[key] = v; }, help);
    };
    auto switch_setting = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& value,
                              const std::string& help) {
        sub->add_flag_callback(flag, [&cli, key, value] { cli[key] = value; }, help);
    };

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset, its splits and a low-shot set");
    setting(gen, "--case", "case", "Dataset case (1 or 2)");
    setting(gen, "--scale", "scale", "Fraction of the original class counts");
    setting(gen, "--low-shot", "low_shot", "Low-shot preset (ls1..ls6) or per-class counts");
    setting(gen, "--missing-count", "missing_count", "Extra missing segments to generate and screen out");
    switch_setting(gen, "--pool-all", "pool_all", "true", "Include the test split in pool.ierfh");
    std::size_t raw_per_class = 0;
    gen->add_option("--raw-per-class", raw_per_class, "Also export this many raw segment CSVs per class");

    auto* red = app.add_subcommand("reduce", "Reduce raw segment CSVs (time,value) to IERFH features");
    std::vector<std::string> inputs;
    double range_min = -1.0, range_max = 1.0, rate = 0.0;
    std::string reduce_output;
    red->add_option("inputs", inputs, "Segment CSV files")->required()->check(CLI::ExistingFile);
    red->add_option("--range-min", range_min, "Lower measurement range");
    red->add_option("--range-max", range_max, "Upper measurement range");
    red->add_option("--rate", rate, "Sample rate in Hz (default: inferred from the time column)");
    red->add_option("--output", reduce_output, "Feature file (default <out>/features.ierfh)");

    auto* pre = app.add_subcommand("pretrain", "Self-supervised pre-training on an unlabeled feature file");
    std::string method_text, features_path;
    pre->add_option("--method", method_text, "ae, simclr, mixup or gan")->required();
    pre->add_option("--features", features_path, "Feature file")->required()->check(CLI::ExistingFile);
    setting(pre, "--epochs", "pretrain_epochs", "Pre-training epochs");
    setting(pre, "--batch-size", "batch_size", "Minibatch size");
    setting(pre, "--lr", "lr", "Adam learning rate");

    auto* fin = app.add_subcommand("finetune", "Fine-tune a pre-trained encoder (or train SUP) on a low-shot set");
    std::string checkpoint, train_path, validation_path;
    fin->add_option("--checkpoint", checkpoint, "Pre-trained checkpoint, or 'sup' for a fresh classifier")->required();
    fin->add_option("--train", train_path, "Labeled low-shot feature file")->required()->check(CLI::ExistingFile);
    fin->add_option("--validation", validation_path, "Labeled validation feature file")
        ->required()
        ->check(CLI::ExistingFile);
    setting(fin, "--case", "case", "Dataset case (sets the class count)");
    setting(fin, "--epochs", "finetune_epochs", "Fine-tuning epochs");
    setting(fin, "--sup-epochs", "sup_epochs", "Epochs when training SUP from scratch");
    setting(fin, "--batch-size", "batch_size", "Minibatch size");
    setting(fin, "--lr", "lr", "Adam learning rate");

    auto* eva = app.add_subcommand("evaluate", "Score a classifier checkpoint on a labeled feature file");
    std::string eval_checkpoint, eval_features;
    eva->add_option("--checkpoint", eval_checkpoint, "Classifier checkpoint")->required()->check(CLI::ExistingFile);
    eva->add_option("--features", eval_features, "Labeled feature file")->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "Full pipeline: generate, pre-train, fine-tune, evaluate, report");
    switch_setting(run, "--desk", "profile", "desk", "Desk-scale profile (default)");
    switch_setting(run, "--full", "profile", "full", "Full-scale profile");
    switch_setting(run, "--pool-all", "pool_all", "true", "Pre-train on every sample, test split included");
    switch_setting(run, "--no-checkpoints", "checkpoints", "false", "Skip writing checkpoints");
    setting(run, "--case", "case", "Dataset case (1 or 2)");
    setting(run, "--methods", "methods", "Comma list of sup, ae, simclr, mixup, gan");
    setting(run, "--low-shot", "low_shot", "Low-shot specs separated by ';' (presets ls1..ls6 or counts)");
    setting(run, "--scale", "scale", "Fraction of the original class counts");
    setting(run, "--repeats", "repeats", "Fine-tuning repeats per method and low-shot set");
    setting(run, "--pretrain-epochs", "pretrain_epochs", "Pre-training epochs");
    setting(run, "--finetune-epochs", "finetune_epochs", "Fine-tuning epochs");
    setting(run, "--sup-epochs", "sup_epochs", "Supervised baseline epochs");
    setting(run, "--batch-size", "batch_size", "Minibatch size");
    setting(run, "--lr", "lr", "Adam learning rate");
    setting(run, "--split", "split", "label,validation,test ratios");

    auto* rep = app.add_subcommand("report", "Rebuild the report CSVs of a finished run");
    std::string run_dir;
    rep->add_option("--run-dir", run_dir, "Directory written by 'run'")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(resolve(g, cli), raw_per_class);
        if (red->parsed()) return cmd_reduce(resolve(g, cli), inputs, range_min, range_max, rate, reduce_output);
        if (pre->parsed()) return cmd_pretrain(resolve(g, cli), method_text, features_path);
        if (fin->parsed()) return cmd_finetune(resolve(g, cli), checkpoint, train_path, validation_path);
        if (eva->parsed()) return cmd_evaluate(resolve(g, cli), eval_checkpoint, eval_features);
        if (run->parsed()) return cmd_run(resolve(g, cli));
        if (rep->parsed()) {
            resolve(g, cli);  // validates the config and environment layers
            return cmd_report(g, run_dir);
        }
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        print_error("io", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}
