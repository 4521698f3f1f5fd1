#pragma once

#include "shmssl/gradcheck.hpp"
#include "shmssl/layers.hpp"
#include "shmssl/rng.hpp"
#include "shmssl/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shmssl::checks {

/// x[i] = sin(a * i + b), reshaped to `shape`. Mirrors the inputs used to
/// produce the frozen reference values.
Tensor sin_tensor(Shape shape, double a, double b);

Tensor normal_tensor(Shape shape, Rng& rng, double stddev = 1.0);

// Brute-force loss evaluations, written as plain loops over the definitions.
double naive_simclr(const Tensor& view1, const Tensor& view2, double temperature);
double naive_mixup(const Tensor& view1, const Tensor& mixed, const Tensor& view2, std::span<const double> lambdas,
                   double temperature);
double naive_gan_discriminator(std::span<const double> d_real, std::span<const double> d_fake);
double naive_gan_generator(std::span<const double> d_fake);

enum class LayerCase { Conv1d, Deconv1d, BatchNorm1d, ReLU, Linear };
enum class LossCase { Reconstruction, SimClr, Mixup, GanDiscriminator, GanGenerator, CrossEntropy };

inline constexpr LayerCase kLayerCases[] = {LayerCase::Conv1d, LayerCase::Deconv1d, LayerCase::BatchNorm1d,
                                            LayerCase::ReLU, LayerCase::Linear};
inline constexpr LossCase kLossCases[] = {LossCase::Reconstruction, LossCase::SimClr,          LossCase::Mixup,
                                          LossCase::GanDiscriminator, LossCase::GanGenerator, LossCase::CrossEntropy};

std::string name_of(LayerCase c);
std::string name_of(LossCase c);

/// Finite-difference check of one small random layer instance against the
/// objective sum(w * layer(x)) with random w, over input and parameters.
GradCheckReport check_layer(LayerCase c, std::uint64_t seed);

/// Finite-difference check of one small random loss instance over its inputs.
GradCheckReport check_loss(LossCase c, std::uint64_t seed);

struct MixingRatioResult {
    double s1 = 0.0;
    double s2 = 0.0;
    double ratio = 0.0;     // exp(s1 / tau) / exp(s2 / tau)
    double expected = 0.0;  // lambda / (1 - lambda)
    double relative_error() const;
};

/// Minimizes the per-sample Mixup objective over the two positive-pair
/// similarities (s1, s2) in [-1, 1]^2 by projected gradient descent, with
/// `negatives` fixed cosine similarities to the other candidates.
MixingRatioResult minimize_mixing_objective(double lambda, std::span<const double> negatives, double temperature);

}  // namespace shmssl::checks
