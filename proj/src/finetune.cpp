#include "shmssl/finetune.hpp"

#include "shmssl/adam.hpp"
#include "shmssl/batching.hpp"
#include "shmssl/error.hpp"
#include "shmssl/losses.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace shmssl {

FinetuneConfig FinetuneConfig::supervised() {
    FinetuneConfig c;
    c.epochs = 200;
    return c;
}

CrossEntropy cross_entropy(const Tensor& probabilities, std::span<const int> labels) {
    if (probabilities.rank() != 2) {
        throw DimensionError("cross_entropy: expected (batch x classes), got " + shape_string(probabilities.shape()));
    }
    const std::size_t b = probabilities.dim(0);
    const std::size_t k = probabilities.dim(1);
    if (labels.size() != b) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(b) +
                             " rows");
    }
    CrossEntropy out;
    if (b == 0) return out;
    for (std::size_t i = 0; i < b; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double p = probabilities[i * k + j];
            if (!(p >= 0.0 && p <= 1.0)) throw InputError("cross_entropy: row " + std::to_string(i) + " has an entry outside [0, 1]");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-6) throw InputError("cross_entropy: row " + std::to_string(i) + " does not sum to 1");
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
            throw InputError("cross_entropy: label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(k) + ")");
        }
        double p = probabilities[i * k + static_cast<std::size_t>(labels[i])];
        if (p < 1e-12) {
            p = 1e-12;
            ++out.clipped;
        }
        out.value -= std::log(p);
    }
    out.value /= static_cast<double>(b);
    return out;
}

std::vector<FeatureVector> features_of(std::span<const LabeledSample> samples) {
    std::vector<FeatureVector> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.feature);
    return out;
}

std::vector<int> labels_of(std::span<const LabeledSample> samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

namespace {

Evaluation evaluate_stacked(ModelBundle& classifier, const Tensor& inputs, std::span<const int> labels,
                            std::vector<std::string> class_names) {
    const std::vector<int> pred = predict(classifier, inputs);
    Evaluation e{confusion(pred, labels, classifier.num_classes, std::move(class_names)), {}};
    e.overall = overall(e.confusion);
    return e;
}

}  // namespace

Evaluation evaluate(ModelBundle& classifier, std::span<const LabeledSample> samples,
                    std::vector<std::string> class_names) {
    if (samples.empty()) throw InputError("evaluate: no samples");
    const auto features = features_of(samples);
    const auto labels = labels_of(samples);
    return evaluate_stacked(classifier, stack_features(features), labels, std::move(class_names));
}

FinetuneResult finetune(ModelBundle classifier, std::span<const LabeledSample> low_shot,
                        std::span<const LabeledSample> validation, const FinetuneConfig& config) {
    if (!classifier.has(net::kEncoder) || !classifier.has(net::kHead)) {
        throw ConfigError("finetune: bundle is not a classifier (needs encoder and head)");
    }
    const std::size_t k = classifier.num_classes;
    if (config.epochs < 0) throw ConfigError("finetune: epochs must be non-negative");
    if (validation.empty()) throw ConfigError("finetune: validation set is empty");

    FinetuneResult result;
    std::set<int> present;
    for (const auto& s : low_shot) {
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= k) {
            throw InputError("finetune: low-shot label " + std::to_string(s.label) + " outside [0, " +
                             std::to_string(k) + ")");
        }
        present.insert(s.label);
    }
    if (present.size() < 2) throw ConfigError("finetune: low-shot set must cover at least two classes");
    for (std::size_t c = 0; c < k; ++c) {
        if (!present.count(static_cast<int>(c))) {
            result.warnings.push_back("class " + std::to_string(c) + " has no low-shot samples");
        }
    }

    const auto train_features = features_of(low_shot);
    const auto train_labels = labels_of(low_shot);
    const auto val_features = features_of(validation);
    const auto val_labels = labels_of(validation);
    const Tensor val_inputs = stack_features(val_features);

    const Tensor train_inputs = stack_features(train_features);
    auto score = [&](int epoch, double train_loss) {
        recalibrate_batchnorm(classifier, {net::kEncoder}, train_inputs, config.batch_size);
        const Evaluation e = evaluate_stacked(classifier, val_inputs, val_labels, {});
        result.trace.push_back({epoch, train_loss, e.overall.macro_f1, e.overall.accuracy});
        if (epoch == 0 || e.overall.macro_f1 > result.best_val_f1) {
            result.best_val_f1 = e.overall.macro_f1;
            result.best_epoch = epoch;
            result.model = classifier;
        }
    };
    score(0, std::nan(""));

    const std::vector<Tensor*> params = classifier.parameters({net::kEncoder, net::kHead});
    AdamState adam = make_adam_state(params, AdamConfig{config.lr});
    const Rng root = Rng(config.seed).split("finetune");

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng = root.split(static_cast<std::uint64_t>(epoch));
        const auto batches = make_batches(train_features.size(), config.batch_size, rng);
        double sum = 0.0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& idx = batches[bi];
            std::vector<int> y(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) y[r] = train_labels[idx[r]];
            for (auto& [name, s] : classifier.nets) s.zero_grad();
            const Tensor logits = classifier_logits(classifier, stack_features(train_features, idx), Mode::Train);
            const LossGrad l = softmax_cross_entropy(logits, y);
            if (!std::isfinite(l.value)) throw DivergenceError("finetune: non-finite loss", epoch, static_cast<int>(bi));
            backward_chain(classifier, {net::kEncoder, net::kHead}, l.grad);
            adam_step(adam, params);
            sum += l.value;
        }
        score(epoch, sum / static_cast<double>(batches.size()));
    }
    for (auto& [name, s] : result.model.nets) s.clear_cache();
    return result;
}

std::string finetune_trace_csv(std::span<const FinetuneEpoch> trace) {
    std::string s = "epoch,val_F1,val_accuracy\n";
    char buf[96];
    for (const auto& e : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", e.epoch, e.val_f1, e.val_accuracy);
        s += buf;
    }
    return s;
}

}  // namespace shmssl
