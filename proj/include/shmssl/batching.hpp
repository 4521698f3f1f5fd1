#pragma once

#include "shmssl/reduction.hpp"
#include "shmssl/rng.hpp"
#include "shmssl/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace shmssl {

/// Shuffled minibatches of indices [0, n). A trailing batch of one sample is
/// folded into the previous batch, since batchnorm needs two values per channel.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

/// Stacks the selected feature vectors into a (B x 1 x 512) tensor.
Tensor stack_features(std::span<const FeatureVector> features, std::span<const std::size_t> indices);
Tensor stack_features(std::span<const FeatureVector> features);

}  // namespace shmssl
