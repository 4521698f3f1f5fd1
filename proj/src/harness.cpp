#include "shmssl/harness.hpp"

#include "binary_io.hpp"
#include "shmssl/finetune.hpp"
#include "shmssl/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

namespace shmssl {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t master, const std::string& stream, std::uint64_t index) {
    return Rng(master).split(stream).split(index).next_u64();
}

// ---------------------------------------------------------------------------
// Splits and low-shot sets

DatasetSplit split_dataset(std::span<const LabeledSample> samples, const SplitRatios& ratios, std::uint64_t seed) {
    if (samples.empty()) throw ConfigError("split_dataset: no samples");
    if (ratios.label < 0.0 || ratios.validation < 0.0 || ratios.test < 0.0 ||
        std::abs(ratios.label + ratios.validation + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be non-negative and sum to 1");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);

    // 0 = label, 1 = validation, 2 = test
    std::vector<int> target(samples.size(), 2);
    const Rng root = Rng(seed).split("split");
    for (auto& [label, idx] : by_class) {
        if (idx.size() < 3) {
            throw ConfigError("split_dataset: class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                              " samples, fewer than the three splits");
        }
        Rng rng = root.split(static_cast<std::uint64_t>(label));
        rng.shuffle(std::span(idx));
        const auto n = static_cast<double>(idx.size());
        const auto n_label = static_cast<std::size_t>(std::llround(ratios.label * n));
        const auto n_val = std::min(idx.size() - n_label, static_cast<std::size_t>(std::llround(ratios.validation * n)));
        for (std::size_t j = 0; j < n_label; ++j) target[idx[j]] = 0;
        for (std::size_t j = n_label; j < n_label + n_val; ++j) target[idx[j]] = 1;
    }
    DatasetSplit out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (target[i] == 0 ? out.label : target[i] == 1 ? out.validation : out.test).push_back(samples[i]);
    }
    return out;
}

std::vector<LabeledSample> draw_low_shot(std::span<const LabeledSample> label_split,
                                         const std::vector<std::size_t>& counts, std::uint64_t seed,
                                         const std::vector<std::string>& names) {
    std::vector<std::vector<std::size_t>> by_class(counts.size());
    for (std::size_t i = 0; i < label_split.size(); ++i) {
        const int y = label_split[i].label;
        if (y >= 0 && static_cast<std::size_t>(y) < counts.size()) by_class[static_cast<std::size_t>(y)].push_back(i);
    }
    const Rng root = Rng(seed).split("low-shot");
    std::vector<LabeledSample> out;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        auto& idx = by_class[c];
        if (counts[c] > idx.size()) {
            const std::string name = c < names.size() ? names[c] : "class" + std::to_string(c);
            throw ConfigError("low-shot: class '" + name + "' needs " + std::to_string(counts[c]) +
                              " samples but the label split has " + std::to_string(idx.size()));
        }
        Rng rng = root.split(c);
        rng.shuffle(std::span(idx));
        idx.resize(counts[c]);
        std::sort(idx.begin(), idx.end());
        for (std::size_t i : idx) out.push_back(label_split[i]);
    }
    return out;
}

std::size_t LowShotSpec::total() const {
    std::size_t s = 0;
    for (std::size_t c : counts) s += c;
    return s;
}

const std::vector<LowShotSpec>& low_shot_presets(Case c) {
    static const std::vector<LowShotSpec> one{
        {"ls1", {10, 10, 10, 10, 10, 10}},    {"ls2", {30, 30, 30, 30, 30, 30}},
        {"ls3", {50, 50, 50, 50, 50, 50}},    {"ls4", {50, 30, 30, 30, 50, 30}},
        {"ls5", {100, 50, 50, 50, 80, 50}},   {"ls6", {200, 50, 50, 50, 150, 50}},
    };
    static const std::vector<LowShotSpec> two{
        {"ls1", {10, 10, 10, 10, 10}},   {"ls2", {30, 30, 30, 30, 30}},  {"ls3", {50, 50, 50, 50, 50}},
        {"ls4", {30, 20, 20, 10, 10}},   {"ls5", {50, 50, 30, 30, 30}},  {"ls6", {100, 80, 50, 50, 50}},
    };
    return c == Case::One ? one : two;
}

LowShotSpec parse_low_shot(Case c, const std::string& text) {
    for (const auto& p : low_shot_presets(c))
        if (p.name == text) return p;
    const std::size_t k = case_patterns(c).size();
    std::vector<std::size_t> counts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const long long v = parse_integer("low_shot", item);
        if (v < 0) throw ConfigError("low_shot: negative count in '" + text + "'");
        counts.push_back(static_cast<std::size_t>(v));
    }
    if (counts.size() == 1) counts.assign(k, counts[0]);
    if (counts.size() != k) {
        throw ConfigError("low_shot '" + text + "' needs 1 or " + std::to_string(k) + " counts for case " +
                          std::to_string(static_cast<int>(c)));
    }
    std::string name = "n";
    for (std::size_t i = 0; i < counts.size(); ++i) name += (i ? "-" : "") + std::to_string(counts[i]);
    return {name, counts};
}

std::vector<std::string> class_names(Case c) {
    std::vector<std::string> out;
    for (Pattern p : case_patterns(c)) out.emplace_back(to_string(p));
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::desk() {
    ExperimentConfig c;
    c.low_shots = {low_shot_presets(c.case_id)[0]};
    return c;
}

ExperimentConfig ExperimentConfig::full() {
    ExperimentConfig c = desk();
    c.scale = 1.0;
    c.pretrain_epochs = 200;
    c.finetune_epochs = 50;
    c.sup_epochs = 200;
    return c;
}

void ExperimentConfig::validate() const {
    if (methods.empty()) throw ConfigError("no methods selected");
    if (low_shots.empty()) throw ConfigError("no low-shot sets selected");
    const std::size_t k = case_patterns(case_id).size();
    for (const auto& ls : low_shots) {
        if (ls.counts.size() != k) {
            throw ConfigError("low-shot '" + ls.name + "' has " + std::to_string(ls.counts.size()) +
                              " counts; case " + std::to_string(static_cast<int>(case_id)) + " has " +
                              std::to_string(k) + " classes");
        }
    }
    if (!(scale > 0.0)) throw ConfigError("scale must be positive");
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
    if (pretrain_epochs < 0 || finetune_epochs < 0 || sup_epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (ratios.label < 0.0 || ratios.validation < 0.0 || ratios.test < 0.0 ||
        std::abs(ratios.label + ratios.validation + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be non-negative and sum to 1");
    }
}

std::span<const std::string> setting_keys() {
    static const std::vector<std::string> keys{
        "profile", "case", "methods", "low_shot", "scale", "repeats", "seed", "out", "pretrain_epochs",
        "finetune_epochs", "sup_epochs", "batch_size", "lr", "split", "pool_all", "amplitude_jitter",
        "missing_count", "checkpoints",
    };
    return keys;
}

namespace {

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<LowShotSpec> parse_low_shot_list(Case c, const std::string& text) {
    // Specs are separated by ';'. A comma list made only of preset names is
    // also accepted ("ls1,ls4").
    std::vector<LowShotSpec> out;
    for (const auto& part : split_list(text, ';')) {
        const auto items = split_list(part, ',');
        const bool names = std::all_of(items.begin(), items.end(), [](const std::string& s) {
            return !s.empty() && std::isalpha(static_cast<unsigned char>(s[0]));
        });
        if (names && items.size() > 1) {
            for (const auto& i : items) out.push_back(parse_low_shot(c, i));
        } else {
            out.push_back(parse_low_shot(c, part));
        }
    }
    return out;
}

}  // namespace

void apply_settings(ExperimentConfig& config, const KeyValues& settings) {
    const auto keys = setting_keys();
    for (const auto& [k, v] : settings) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown setting '" + k + "'");
    }
    if (auto it = settings.find("profile"); it != settings.end()) {
        const ExperimentConfig keep = config;
        if (it->second == "desk") {
            config = ExperimentConfig::desk();
        } else if (it->second == "full") {
            config = ExperimentConfig::full();
        } else {
            throw ConfigError("profile must be 'desk' or 'full', got '" + it->second + "'");
        }
        config.seed = keep.seed;
        config.out_dir = keep.out_dir;
    }
    std::string low_shot_text;
    for (const auto& [k, v] : settings) {
        if (k == "profile") {
        } else if (k == "case") {
            const long long c = parse_integer(k, v);
            if (c != 1 && c != 2) throw ConfigError("case must be 1 or 2");
            const Case next = static_cast<Case>(c);
            if (next != config.case_id) {
                config.case_id = next;
                if (!settings.count("low_shot")) config.low_shots = {low_shot_presets(next)[0]};
            }
        } else if (k == "methods") {
            config.methods.clear();
            for (const auto& m : split_list(v, ',')) {
                const Method method = parse_method(m);
                if (std::find(config.methods.begin(), config.methods.end(), method) == config.methods.end())
                    config.methods.push_back(method);
            }
        } else if (k == "low_shot") {
            low_shot_text = v;
        } else if (k == "scale") {
            config.scale = parse_real(k, v);
        } else if (k == "repeats") {
            config.repeats = static_cast<int>(parse_integer(k, v));
        } else if (k == "seed") {
            const long long s = parse_integer(k, v);
            if (s < 0) throw ConfigError("seed must be non-negative");
            config.seed = static_cast<std::uint64_t>(s);
        } else if (k == "out") {
            config.out_dir = v;
        } else if (k == "pretrain_epochs") {
            config.pretrain_epochs = static_cast<int>(parse_integer(k, v));
        } else if (k == "finetune_epochs") {
            config.finetune_epochs = static_cast<int>(parse_integer(k, v));
        } else if (k == "sup_epochs") {
            config.sup_epochs = static_cast<int>(parse_integer(k, v));
        } else if (k == "batch_size") {
            const long long b = parse_integer(k, v);
            if (b < 2) throw ConfigError("batch_size must be at least 2");
            config.batch_size = static_cast<std::size_t>(b);
        } else if (k == "lr") {
            config.lr = parse_real(k, v);
        } else if (k == "split") {
            const auto parts = split_list(v, ',');
            if (parts.size() != 3) throw ConfigError("split expects three ratios label,validation,test");
            config.ratios = {parse_real(k, parts[0]), parse_real(k, parts[1]), parse_real(k, parts[2])};
        } else if (k == "pool_all") {
            config.pool_all = parse_flag(k, v);
        } else if (k == "amplitude_jitter") {
            config.data.amplitude_jitter = parse_real(k, v);
        } else if (k == "missing_count") {
            const long long n = parse_integer(k, v);
            if (n < 0) throw ConfigError("missing_count must be non-negative");
            config.data.missing_count = static_cast<std::size_t>(n);
        } else if (k == "checkpoints") {
            config.save_checkpoints = parse_flag(k, v);
        }
    }
    if (!low_shot_text.empty()) config.low_shots = parse_low_shot_list(config.case_id, low_shot_text);
    config.validate();
}

// ---------------------------------------------------------------------------
// Results

double ResultRow::mean_f1() const {
    if (repeats.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : repeats) s += r.test_f1;
    return s / static_cast<double>(repeats.size());
}

double ResultRow::std_f1() const {
    if (repeats.size() < 2) return 0.0;
    const double m = mean_f1();
    double s = 0.0;
    for (const auto& r : repeats) s += (r.test_f1 - m) * (r.test_f1 - m);
    return std::sqrt(s / static_cast<double>(repeats.size()));
}

const ResultRow* ResultTable::find(Method method, const std::string& low_shot) const {
    for (const auto& r : rows)
        if (r.method == method && r.low_shot == low_shot) return &r;
    return nullptr;
}

StageError::StageError(ErrorKind kind, std::string stage, std::string method, std::uint64_t seed,
                       const std::string& detail)
    : Error(kind, "stage=" + stage + " method=" + method + " seed=" + std::to_string(seed) + ": " + detail),
      stage_(std::move(stage)),
      method_(std::move(method)),
      seed_(seed) {}

namespace {

template <class F>
auto staged(const std::string& stage, const std::string& method, std::uint64_t seed, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(e.kind(), stage, method, seed, e.what());
    } catch (const std::exception& e) {
        throw StageError(ErrorKind::Usage, stage, method, seed, e.what());
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

std::string run_name(Method m, const std::string& low_shot, int repeat) {
    return std::string(to_string(m)) + "_" + low_shot + "_r" + std::to_string(repeat);
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config, const ProgressLog& log) {
    auto say = [&](const std::string& s) {
        if (log) log(s);
    };
    staged("config", "-", config.seed, [&] { config.validate(); });
    const fs::path out = config.out_dir;
    staged("setup", "-", config.seed, [&] {
        for (const char* sub : {"data", "pretrain", "finetune", "confusion"}) ensure_dir(out / sub);
    });

    ResultTable table;
    table.case_id = config.case_id;
    table.class_names = class_names(config.case_id);
    const std::size_t k = table.class_names.size();
    for (const auto& ls : config.low_shots) table.low_shots.push_back(ls.name);

    const std::uint64_t data_seed = derive_seed(config.seed, "dataset");
    const auto samples = staged("datagen", "-", data_seed, [&] {
        const auto counts = scaled_counts(config.case_id, config.scale);
        say("generating case " + std::to_string(static_cast<int>(config.case_id)) + " dataset");
        auto s = gen_dataset(config.case_id, counts, data_seed, config.data);
        write_features(out / "data" / "dataset.ierfh", features_of(s), labels_of(s));
        return s;
    });

    const std::uint64_t split_seed = derive_seed(config.seed, "split");
    const DatasetSplit split = staged("split", "-", split_seed, [&] {
        auto sp = split_dataset(samples, config.ratios, split_seed);
        say("split " + std::to_string(sp.label.size()) + "/" + std::to_string(sp.validation.size()) + "/" +
            std::to_string(sp.test.size()));
        return sp;
    });

    std::vector<std::vector<LabeledSample>> low_shot_sets;
    for (std::size_t i = 0; i < config.low_shots.size(); ++i) {
        const std::uint64_t s = derive_seed(config.seed, "low-shot", i);
        low_shot_sets.push_back(staged("low-shot", "-", s, [&] {
            return draw_low_shot(split.label, config.low_shots[i].counts, s, table.class_names);
        }));
    }

    std::vector<FeatureVector> pool = features_of(split.label);
    for (const auto& s : split.validation) pool.push_back(s.feature);
    if (config.pool_all)
        for (const auto& s : split.test) pool.push_back(s.feature);

    for (Method method : config.methods) {
        const std::string mname = to_string(method);
        std::optional<ModelBundle> pretrained;
        if (method != Method::Sup) {
            PretrainConfig pc;
            pc.method = method;
            pc.epochs = config.pretrain_epochs;
            pc.batch_size = config.batch_size;
            pc.lr = config.lr;
            pc.seed = derive_seed(config.seed, "pretrain", static_cast<std::uint64_t>(method));
            staged("pretrain", mname, pc.seed, [&] {
                say("pretrain " + mname + " on " + std::to_string(pool.size()) + " samples");
                PretrainResult r = pretrain(pool, pc);
                detail::write_text(out / "pretrain" / (mname + "_loss.csv"), loss_trace_csv(method, r.epoch_loss));
                if (config.save_checkpoints) save_checkpoint(r.bundle, out / "pretrain" / (mname + ".ckpt"));
                table.pretrain_loss[method] = r.epoch_loss;
                pretrained = std::move(r.bundle);
            });
        }

        for (std::size_t li = 0; li < config.low_shots.size(); ++li) {
            const std::string& lname = config.low_shots[li].name;
            ResultRow row;
            row.method = method;
            row.low_shot = lname;
            std::optional<ModelBundle> best_model;
            double best_val = -1.0;
            for (int rep = 0; rep < config.repeats; ++rep) {
                const std::uint64_t seed = derive_seed(config.seed, "finetune", static_cast<std::uint64_t>(rep));
                staged("finetune", mname, seed, [&] {
                    FinetuneConfig fc;
                    fc.epochs = method == Method::Sup ? config.sup_epochs : config.finetune_epochs;
                    fc.batch_size = config.batch_size;
                    fc.lr = config.lr;
                    fc.seed = seed;
                    ModelBundle start = method == Method::Sup ? build_for_method(Method::Sup, k, seed)
                                                              : transfer_encoder(*pretrained, k, seed);
                    FinetuneResult fr = finetune(std::move(start), low_shot_sets[li], split.validation, fc);
                    for (const auto& w : fr.warnings) say("warning: " + mname + " " + lname + ": " + w);
                    const std::string name = run_name(method, lname, rep);
                    detail::write_text(out / "finetune" / (name + "_trace.csv"), finetune_trace_csv(fr.trace));
                    Evaluation ev = evaluate(fr.model, split.test, table.class_names);
                    detail::write_text(out / "confusion" / (name + ".csv"), confusion_csv(ev.confusion));
                    row.repeats.push_back(
                        {rep, seed, fr.best_epoch, fr.best_val_f1, ev.overall.macro_f1, ev.overall.accuracy});
                    if (fr.best_val_f1 > best_val) {
                        best_val = fr.best_val_f1;
                        row.best_repeat = rep;
                        row.best_confusion = ev.confusion;
                        best_model = std::move(fr.model);
                    }
                    say(name + ": test F1 " + fmt("%.4f", ev.overall.macro_f1) + " (best epoch " +
                        std::to_string(fr.best_epoch) + ")");
                });
            }
            if (config.save_checkpoints && best_model) {
                staged("checkpoint", mname, config.seed, [&] {
                    save_checkpoint(*best_model, out / "finetune" / (std::string(mname) + "_" + lname + "_best.ckpt"));
                });
            }
            table.rows.push_back(std::move(row));
        }
    }
    staged("report", "-", config.seed, [&] {
        detail::write_text(out / "results.csv", results_csv(table));
        emit_report(table, out);
    });
    return table;
}

std::string results_csv(const ResultTable& table) {
    std::string s = "case,method,low_shot,repeat,seed,best_epoch,val_f1,test_f1,test_accuracy\n";
    for (const auto& row : table.rows) {
        for (const auto& r : row.repeats) {
            s += std::to_string(static_cast<int>(table.case_id)) + "," + to_string(row.method) + "," + row.low_shot +
                 "," + std::to_string(r.repeat) + "," + std::to_string(r.seed) + "," + std::to_string(r.best_epoch) +
                 "," + fmt("%.17g", r.val_f1) + "," + fmt("%.17g", r.test_f1) + "," + fmt("%.17g", r.test_accuracy) +
                 "\n";
        }
    }
    return s;
}

std::string report_grid_csv(const ResultTable& table) {
    std::string s = "method";
    for (const auto& ls : table.low_shots) s += "," + ls;
    s += "\n";
    std::vector<Method> methods;
    for (const auto& row : table.rows)
        if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) methods.push_back(row.method);
    for (Method m : methods) {
        s += to_string(m);
        for (const auto& ls : table.low_shots) {
            const ResultRow* row = table.find(m, ls);
            s += ",";
            if (row) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * row->mean_f1(), 100.0 * row->std_f1());
                s += buf;
            }
        }
        s += "\n";
    }
    return s;
}

std::string report_per_class_csv(const ResultTable& table) {
    std::string s = "method,low_shot,best_repeat,class,precision,recall,f1,support\n";
    for (const auto& row : table.rows) {
        if (row.repeats.empty()) continue;
        const auto metrics = per_class_metrics(row.best_confusion);
        for (std::size_t c = 0; c < metrics.size(); ++c) {
            const std::string name =
                c < table.class_names.size() ? table.class_names[c] : "class" + std::to_string(c);
            s += std::string(to_string(row.method)) + "," + row.low_shot + "," + std::to_string(row.best_repeat) +
                 "," + name + "," + fmt("%.6f", metrics[c].precision) + "," + fmt("%.6f", metrics[c].recall) + "," +
                 fmt("%.6f", metrics[c].f1) + "," + std::to_string(metrics[c].support) + "\n";
        }
    }
    return s;
}

void emit_report(const ResultTable& table, const fs::path& dir) {
    if (table.rows.empty()) throw UsageError("emit_report: empty result table");
    ensure_dir(dir);
    detail::write_text(dir / "report_f1.csv", report_grid_csv(table));
    detail::write_text(dir / "report_per_class.csv", report_per_class_csv(table));
}

ConfusionMatrix parse_confusion_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw InputError("confusion csv: empty");
    auto header = split_list(line, ',');
    if (header.size() < 3) throw InputError("confusion csv: header needs at least two classes");
    std::vector<std::string> names(header.begin() + 1, header.end());
    ConfusionMatrix cm(names.size(), names);
    for (std::size_t r = 0; r < names.size(); ++r) {
        if (!std::getline(ss, line)) throw InputError("confusion csv: missing row " + std::to_string(r));
        const auto cells = split_list(line, ',');
        if (cells.size() != names.size() + 1) throw InputError("confusion csv: row " + std::to_string(r) + " has wrong width");
        for (std::size_t p = 0; p < names.size(); ++p) {
            const long long v = parse_integer("confusion", cells[p + 1]);
            if (v < 0) throw InputError("confusion csv: negative count");
            cm.add(r, p, static_cast<std::uint64_t>(v));
        }
    }
    return cm;
}

ResultTable load_results(const fs::path& run_dir) {
    const auto bytes = detail::read_file(run_dir / "results.csv");
    std::stringstream ss(std::string(bytes.begin(), bytes.end()));
    std::string line;
    if (!std::getline(ss, line) || line.rfind("case,method,low_shot", 0) != 0) {
        throw InputError("results.csv: unexpected header");
    }
    ResultTable table;
    std::size_t line_no = 1;
    while (std::getline(ss, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto c = split_list(line, ',');
        if (c.size() != 9) throw InputError("results.csv:" + std::to_string(line_no) + ": expected 9 columns");
        const long long case_id = parse_integer("case", c[0]);
        if (case_id != 1 && case_id != 2) throw InputError("results.csv: bad case");
        table.case_id = static_cast<Case>(case_id);
        const Method m = parse_method(c[1]);
        RepeatResult r{static_cast<int>(parse_integer("repeat", c[3])),
                       static_cast<std::uint64_t>(std::stoull(c[4])),
                       static_cast<int>(parse_integer("best_epoch", c[5])),
                       parse_real("val_f1", c[6]),
                       parse_real("test_f1", c[7]),
                       parse_real("test_accuracy", c[8])};
        if (std::find(table.low_shots.begin(), table.low_shots.end(), c[2]) == table.low_shots.end())
            table.low_shots.push_back(c[2]);
        auto it = std::find_if(table.rows.begin(), table.rows.end(),
                               [&](const ResultRow& row) { return row.method == m && row.low_shot == c[2]; });
        if (it == table.rows.end()) {
            table.rows.push_back({});
            it = table.rows.end() - 1;
            it->method = m;
            it->low_shot = c[2];
        }
        it->repeats.push_back(r);
    }
    if (table.rows.empty()) throw InputError("results.csv: no result rows");
    table.class_names = class_names(table.case_id);
    for (auto& row : table.rows) {
        double best = -1.0;
        for (const auto& r : row.repeats) {
            if (r.val_f1 > best) {
                best = r.val_f1;
                row.best_repeat = r.repeat;
            }
        }
        const auto cm_bytes =
            detail::read_file(run_dir / "confusion" / (run_name(row.method, row.low_shot, row.best_repeat) + ".csv"));
        row.best_confusion = parse_confusion_csv(std::string(cm_bytes.begin(), cm_bytes.end()));
    }
    return table;
}

}  // namespace shmssl
