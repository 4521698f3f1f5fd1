#pragma once

#include "shmssl/losses.hpp"
#include "shmssl/models.hpp"
#include "shmssl/reduction.hpp"
#include "shmssl/rng.hpp"
#include "shmssl/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace shmssl {

// ---------------------------------------------------------------------------
// Similarity and losses

/// dot(u, v) / (|u| |v|). Zero-norm inputs raise NumericError.
double cosine_sim(std::span<const double> u, std::span<const double> v);

/// Reconstruction loss (1/B) sum_i |x_hat_i - x_i|^2 and its gradient w.r.t. x_hat.
LossGrad ae_loss(const Tensor& reconstruction, const Tensor& input);
/// Same, running the encoder and decoder of `bundle` in evaluation mode.
double ae_loss(ModelBundle& bundle, const Tensor& input);

/// Loss value plus gradients w.r.t. each embedding batch argument, in order.
struct ContrastiveLoss {
    double value = 0.0;
    std::vector<Tensor> grads;
};

/// NT-Xent over 2B embeddings: for every anchor, the other view of the same
/// sample is the positive and the remaining 2B - 2 embeddings are negatives;
/// averaged over both view orderings. view1 and view2 are (B x d).
ContrastiveLoss simclr_loss(const Tensor& view1, const Tensor& view2, double temperature);

/// Per-sample Mixup term for anchor i: a lambda-weighted log-softmax of
/// sim(mixed_i, view1_i) plus a (1 - lambda)-weighted one of
/// sim(mixed_i, view2_i), both normalized over the 2B similarities of mixed_i
/// to every view1_j and view2_j. Similarities are raw cosines (not yet
/// divided by the temperature).
double mixup_sample_loss(double lambda, std::span<const double> sims_to_view1, std::span<const double> sims_to_view2,
                         std::size_t i, double temperature);

/// Mean of mixup_sample_loss over the batch. Gradients are returned for
/// (view1, mixed, view2) in that order.
ContrastiveLoss mixup_loss(const Tensor& view1, const Tensor& mixed, const Tensor& view2,
                           std::span<const double> lambdas, double temperature);

struct GanLoss {
    /// Mean of -log D(x) - log(1 - D(x_hat)); the discriminator minimizes this
    /// (equivalently maximizes the minimax objective).
    double discriminator = 0.0;
    /// Non-saturating generator objective: mean of -log D(x_hat).
    double generator = 0.0;
};

/// Losses from discriminator probabilities; every probability must lie in (0, 1).
GanLoss gan_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// Discriminator loss from logits (D = sigmoid(logit)); grads = {d/d real_logits, d/d fake_logits}.
ContrastiveLoss gan_discriminator_loss(const Tensor& real_logits, const Tensor& fake_logits);
/// Non-saturating generator loss from fake logits; grads = {d/d fake_logits}.
ContrastiveLoss gan_generator_loss(const Tensor& fake_logits);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentationConfig {
    double crop_min_fraction = 0.5;
    /// Noise standard deviation as a fraction of the input's standard deviation.
    double noise_sigma = 0.05;
    double mixup_alpha = 0.2;
};

struct AugmentedView {
    std::vector<double> values;
    std::size_t crop_start = 0;
    std::size_t crop_length = 0;
};

/// Random contiguous crop of length ceil(f * n), f ~ U[crop_min_fraction, 1],
/// linearly resampled back to n, plus Gaussian noise.
AugmentedView augment_view(std::span<const double> x, const AugmentationConfig& config, Rng& rng);

/// Two views with independent randomness.
std::pair<AugmentedView, AugmentedView> simclr_augment(std::span<const double> x, const AugmentationConfig& config,
                                                        Rng& rng);

struct MixedSample {
    std::vector<double> values;
    double lambda = 0.0;
};

/// lambda * a + (1 - lambda) * b.
MixedSample mix(std::span<const double> a, std::span<const double> b, double lambda);
/// Draws lambda ~ Beta(alpha, alpha) and mixes.
MixedSample mixup_augment(std::span<const double> a, std::span<const double> b, double alpha, Rng& rng);

// ---------------------------------------------------------------------------
// Pre-training

struct PretrainConfig {
    Method method = Method::Ae;
    int epochs = 200;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    /// Zero selects the method default: 0.5 for SimCLR, 0.1 for Mixup.
    double temperature = 0.0;
    AugmentationConfig augmentation;
    std::uint64_t seed = 0;

    double effective_temperature() const;
};

struct PretrainResult {
    ModelBundle bundle;
    /// Batch-mean loss of every epoch; for GAN the discriminator objective.
    std::vector<double> epoch_loss;
};

/// Trains the pretext networks of config.method on unlabeled features.
PretrainResult pretrain(std::span<const FeatureVector> data, const PretrainConfig& config);

/// "epoch,method,loss" rows.
std::string loss_trace_csv(Method method, std::span<const double> epoch_loss);

}  // namespace shmssl
