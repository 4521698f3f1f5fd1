#include "shmssl/adam.hpp"

#include "shmssl/error.hpp"

#include <cmath>

namespace shmssl {

namespace {

std::size_t total_size(std::span<Tensor* const> params) {
    std::size_t n = 0;
    for (const Tensor* p : params) n += p->size();
    return n;
}

void apply(AdamState& state, Tensor& param, std::span<const double> grad, std::size_t offset) {
    const AdamConfig& c = state.config;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    auto data = param.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        m = c.beta1 * m + (1.0 - c.beta1) * grad[i];
        v = c.beta2 * v + (1.0 - c.beta2) * grad[i] * grad[i];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        data[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

void check_state(const AdamState& state, std::span<Tensor* const> params) {
    const std::size_t n = total_size(params);
    if (state.m.size() != n || state.v.size() != n) {
        throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                             " elements but parameters hold " + std::to_string(n));
    }
}

}  // namespace

AdamState make_adam_state(std::span<Tensor* const> params, AdamConfig config) {
    const std::size_t n = total_size(params);
    return AdamState{config, 0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i]->shape()) {
            throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                                 shape_string(params[i]->shape()) + " but gradient has " +
                                 shape_string(grads[i]->shape()));
        }
    }
    check_state(state, params);
    ++state.step_count;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        apply(state, *params[i], grads[i]->data(), offset);
        offset += params[i]->size();
    }
}

void adam_step(AdamState& state, std::span<Tensor* const> params) {
    check_state(state, params);
    ++state.step_count;
    std::size_t offset = 0;
    for (Tensor* p : params) {
        p->ensure_grad();
        apply(state, *p, p->grad(), offset);
        offset += p->size();
    }
}

}  // namespace shmssl
