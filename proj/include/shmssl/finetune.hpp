#pragma once

#include "shmssl/datagen.hpp"
#include "shmssl/metrics.hpp"
#include "shmssl/models.hpp"
#include "shmssl/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shmssl {

struct FinetuneConfig {
    int epochs = 50;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int repeats = 5;

    /// Defaults for the purely supervised baseline (200 epochs).
    static FinetuneConfig supervised();
};

struct CrossEntropy {
    double value = 0.0;
    /// Number of true-class probabilities raised to the 1e-12 floor.
    std::size_t clipped = 0;
};

/// Mean of -log p[i, y_i] over rows of a (B x K) probability matrix. Rows must
/// sum to 1 within 1e-6.
CrossEntropy cross_entropy(const Tensor& probabilities, std::span<const int> labels);

struct Evaluation {
    ConfusionMatrix confusion;
    OverallMetrics overall;
};

/// Eval-mode predictions of a classifier bundle scored against the labels.
Evaluation evaluate(ModelBundle& classifier, std::span<const LabeledSample> samples,
                    std::vector<std::string> class_names = {});

struct FinetuneEpoch {
    int epoch = 0;  // 0 is the model before any update
    double train_loss = 0.0;
    double val_f1 = 0.0;
    double val_accuracy = 0.0;
};

struct FinetuneResult {
    ModelBundle model;  // the best-validation snapshot
    std::vector<FinetuneEpoch> trace;
    int best_epoch = 0;
    double best_val_f1 = 0.0;
    std::vector<std::string> warnings;
};

/// Trains every classifier parameter (encoder and head) on the low-shot set
/// with cross-entropy and Adam, scores macro F1 on the validation set after
/// each epoch, and returns the snapshot with the highest validation F1
/// (earliest on ties). Epoch 0, the untouched input, is a candidate too.
FinetuneResult finetune(ModelBundle classifier, std::span<const LabeledSample> low_shot,
                        std::span<const LabeledSample> validation, const FinetuneConfig& config);

/// Columns epoch,val_F1,val_accuracy.
std::string finetune_trace_csv(std::span<const FinetuneEpoch> trace);

std::vector<FeatureVector> features_of(std::span<const LabeledSample> samples);
std::vector<int> labels_of(std::span<const LabeledSample> samples);

}  // namespace shmssl
