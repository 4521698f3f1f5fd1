#include "shmssl/batching.hpp"

#include "shmssl/error.hpp"

#include <numeric>

namespace shmssl {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back().front());
        batches.pop_back();
    }
    return batches;
}

Tensor stack_features(std::span<const FeatureVector> features, std::span<const std::size_t> indices) {
    Tensor out({indices.size(), 1, kFeatureDim});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const FeatureVector& f = features[indices[r]];
        if (f.values.size() != kFeatureDim) {
            throw DimensionError("feature vector " + std::to_string(indices[r]) + " has " +
                                 std::to_string(f.values.size()) + " values, expected 512");
        }
        std::copy(f.values.begin(), f.values.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * kFeatureDim));
    }
    return out;
}

Tensor stack_features(std::span<const FeatureVector> features) {
    std::vector<std::size_t> all(features.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return stack_features(features, all);
}

}  // namespace shmssl
