#pragma once

#include "shmssl/config.hpp"
#include "shmssl/datagen.hpp"
#include "shmssl/error.hpp"
#include "shmssl/metrics.hpp"
#include "shmssl/models.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace shmssl {

struct SplitRatios {
    double label = 0.2;
    double validation = 0.3;
    double test = 0.5;
};

struct DatasetSplit {
    std::vector<LabeledSample> label;
    std::vector<LabeledSample> validation;
    std::vector<LabeledSample> test;
};

/// Stratified split: within each class, round(ratio * n) samples go to the
/// label and validation splits and the remainder to test. Samples keep their
/// input order inside each split. A class with fewer than three samples is a
/// ConfigError.
DatasetSplit split_dataset(std::span<const LabeledSample> samples, const SplitRatios& ratios, std::uint64_t seed);

/// Uniform draw without replacement of counts[c] samples of every class c.
/// A class without enough samples is a ConfigError naming it.
std::vector<LabeledSample> draw_low_shot(std::span<const LabeledSample> label_split,
                                         const std::vector<std::size_t>& counts, std::uint64_t seed,
                                         const std::vector<std::string>& class_names = {});

struct LowShotSpec {
    std::string name;
    std::vector<std::size_t> counts;
    std::size_t total() const;
};

/// ls1..ls3 balanced (10/30/50 per class), ls4..ls6 unbalanced.
const std::vector<LowShotSpec>& low_shot_presets(Case c);
/// A preset name, a single per-class count ("10") or one count per class ("50,30,30,30,50,30").
LowShotSpec parse_low_shot(Case c, const std::string& text);

std::vector<std::string> class_names(Case c);

struct ExperimentConfig {
    Case case_id = Case::One;
    std::vector<Method> methods{Method::Sup, Method::Ae, Method::SimClr, Method::Mixup, Method::Gan};
    std::vector<LowShotSpec> low_shots;
    SplitRatios ratios;
    double scale = 0.1;
    int repeats = 5;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    int pretrain_epochs = 40;
    int finetune_epochs = 20;
    int sup_epochs = 80;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    /// Pre-train on every sample (test split included) instead of label + validation.
    bool pool_all = false;
    DatasetOptions data;
    bool save_checkpoints = true;

    /// Desk-scale profile: 1/10 data, 40 pre-training / 20 fine-tuning / 80 supervised epochs.
    static ExperimentConfig desk();
    /// Full counts with 200 / 50 / 200 epochs.
    static ExperimentConfig full();

    void validate() const;
};

/// Keys understood by apply_settings.
std::span<const std::string> setting_keys();

/// Applies a flat settings map. A "profile" key (desk or full) is applied
/// before the others; unknown keys are a ConfigError.
void apply_settings(ExperimentConfig& config, const KeyValues& settings);

struct RepeatResult {
    int repeat = 0;
    std::uint64_t seed = 0;
    int best_epoch = 0;
    double val_f1 = 0.0;
    double test_f1 = 0.0;
    double test_accuracy = 0.0;
};

struct ResultRow {
    Method method = Method::Sup;
    std::string low_shot;
    std::vector<RepeatResult> repeats;
    /// Test confusion matrix of the repeat with the highest validation F1.
    ConfusionMatrix best_confusion{2};
    int best_repeat = 0;

    double mean_f1() const;
    /// Population standard deviation over the repeats (0 for a single repeat).
    double std_f1() const;
};

struct ResultTable {
    Case case_id = Case::One;
    std::vector<std::string> class_names;
    std::vector<std::string> low_shots;  // column order
    std::vector<ResultRow> rows;
    std::map<Method, std::vector<double>> pretrain_loss;

    const ResultRow* find(Method method, const std::string& low_shot) const;
};

/// Error raised by run_experiment; the message carries stage, method and seed
/// and the kind is that of the underlying failure.
class StageError : public Error {
public:
    StageError(ErrorKind kind, std::string stage, std::string method, std::uint64_t seed, const std::string& detail);

    const std::string& stage() const noexcept { return stage_; }
    const std::string& method() const noexcept { return method_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::string stage_;
    std::string method_;
    std::uint64_t seed_;
};

using ProgressLog = std::function<void(const std::string&)>;

/// Seed of a named pipeline stream derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, const std::string& stream, std::uint64_t index = 0);

/// Full pipeline: generate, split, draw low-shot sets, pre-train each SSL
/// method once, fine-tune every (method, low-shot) pair `repeats` times and
/// evaluate on the test split. Artifacts land in config.out_dir.
ResultTable run_experiment(const ExperimentConfig& config, const ProgressLog& log = {});

/// Per-repeat CSV written by run_experiment.
std::string results_csv(const ResultTable& table);

/// Writes report_f1.csv (methods x low-shot grid of "mean ± std" macro F1 in
/// percent) and report_per_class.csv into `dir`.
void emit_report(const ResultTable& table, const std::filesystem::path& dir);
std::string report_grid_csv(const ResultTable& table);
std::string report_per_class_csv(const ResultTable& table);

/// Rebuilds a table from a run directory (results.csv plus the confusion CSVs).
ResultTable load_results(const std::filesystem::path& run_dir);

/// Inverse of confusion_csv.
ConfusionMatrix parse_confusion_csv(const std::string& text);

}  // namespace shmssl
