#pragma once

#include "shmssl/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace shmssl {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moment estimates for one parameter set. m and v are laid out as the
/// concatenation of the tracked tensors, in order.
struct AdamState {
    AdamConfig config;
    std::uint64_t step_count = 0;
    std::vector<double> m;
    std::vector<double> v;
};

AdamState make_adam_state(std::span<Tensor* const> params, AdamConfig config = {});

/// Bias-corrected Adam update of params using grads.
void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor* const> grads);

/// Same, reading each parameter's own gradient slot.
void adam_step(AdamState& state, std::span<Tensor* const> params);

}  // namespace shmssl
