#include "shmssl/layers.hpp"

#include "shmssl/error.hpp"
#include "shmssl/kernels.hpp"

#include <cmath>

namespace shmssl {

namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
}

void require_rank3(const char* layer, const Tensor& input, std::size_t channels) {
    if (input.rank() != 3 || input.dim(1) != channels) {
        throw DimensionError(std::string(layer) + ": expected input (batch x " + std::to_string(channels) +
                             " x length), got " + shape_string(input.shape()));
    }
}

Tensor& require_cache(std::optional<Tensor>& cache, const char* layer) {
    if (!cache) throw UsageError(std::string(layer) + ": backward called without a cached training-mode forward");
    return *cache;
}

}  // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv1d: return "conv1d";
        case LayerKind::Deconv1d: return "deconv1d";
        case LayerKind::BatchNorm1d: return "batchnorm1d";
        case LayerKind::ReLU: return "relu";
        case LayerKind::Linear: return "linear";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Unflatten: return "unflatten";
    }
    return "unknown";
}

std::size_t conv1d_out_length(std::size_t in_length, std::size_t kernel, std::size_t stride) {
    if (in_length < kernel) {
        throw DimensionError("conv1d: input length " + std::to_string(in_length) + " shorter than kernel " +
                             std::to_string(kernel));
    }
    return (in_length - kernel) / stride + 1;
}

std::size_t deconv1d_out_length(std::size_t in_length, std::size_t kernel, std::size_t stride,
                                std::size_t output_padding) {
    return (in_length - 1) * stride + kernel + output_padding;
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride, Rng& rng)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride),
      weight_({out_channels, in_channels, kernel}), bias_({out_channels}) {
    if (in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0) {
        throw ConfigError("conv1d: channels, kernel and stride must be positive");
    }
    const double bound = std::sqrt(1.0 / static_cast<double>(in_channels * kernel));
    init_uniform(weight_, bound, rng);
    init_uniform(bias_, bound, rng);
}

Tensor Conv1d::forward(const Tensor& input, Mode mode) {
    require_rank3("conv1d", input, in_channels_);
    const kernels::ConvDims d{input.dim(0), in_channels_, out_channels_, input.dim(2), kernel_, stride_,
                              conv1d_out_length(input.dim(2), kernel_, stride_)};
    Tensor out({d.batch, d.out_channels, d.out_length});
    kernels::parallel::conv1d_forward(d, input.data(), weight_.data(), bias_.data(), out.data());
    if (mode == Mode::Train) input_ = input;
    return out;
}

Tensor Conv1d::backward(const Tensor& grad_output) {
    const Tensor& input = require_cache(input_, "conv1d");
    const kernels::ConvDims d{input.dim(0), in_channels_, out_channels_, input.dim(2), kernel_, stride_,
                              conv1d_out_length(input.dim(2), kernel_, stride_)};
    expect_shape("conv1d backward", {d.batch, d.out_channels, d.out_length}, grad_output.shape());
    weight_.ensure_grad();
    bias_.ensure_grad();
    kernels::parallel::conv1d_backward_params(d, input.data(), grad_output.data(), weight_.grad(), bias_.grad());
    Tensor grad_input(input.shape());
    kernels::parallel::conv1d_backward_data(d, grad_output.data(), weight_.data(), grad_input.data());
    return grad_input;
}

std::vector<NamedTensorRef> Conv1d::named_parameters() {
    return {{"weight", &weight_}, {"bias", &bias_}};
}

// ---------------------------------------------------------------------------
// Deconv1d

Deconv1d::Deconv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                   std::size_t output_padding, Rng& rng)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride),
      output_padding_(output_padding), weight_({in_channels, out_channels, kernel}), bias_({out_channels}) {
    if (in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0) {
        throw ConfigError("deconv1d: channels, kernel and stride must be positive");
    }
    // Same fan-in convention as PyTorch's ConvTranspose1d: weight.size(1) * kernel.
    const double bound = std::sqrt(1.0 / static_cast<double>(out_channels * kernel));
    init_uniform(weight_, bound, rng);
    init_uniform(bias_, bound, rng);
}

Tensor Deconv1d::forward(const Tensor& input, Mode mode) {
    require_rank3("deconv1d", input, in_channels_);
    if (input.dim(2) == 0) throw DimensionError("deconv1d: empty input length");
    const kernels::ConvDims d{input.dim(0), in_channels_, out_channels_, input.dim(2), kernel_, stride_,
                              deconv1d_out_length(input.dim(2), kernel_, stride_, output_padding_)};
    Tensor out({d.batch, d.out_channels, d.out_length});
    kernels::parallel::deconv1d_forward(d, input.data(), weight_.data(), bias_.data(), out.data());
    if (mode == Mode::Train) input_ = input;
    return out;
}

Tensor Deconv1d::backward(const Tensor& grad_output) {
    const Tensor& input = require_cache(input_, "deconv1d");
    const kernels::ConvDims d{input.dim(0), in_channels_, out_channels_, input.dim(2), kernel_, stride_,
                              deconv1d_out_length(input.dim(2), kernel_, stride_, output_padding_)};
    expect_shape("deconv1d backward", {d.batch, d.out_channels, d.out_length}, grad_output.shape());
    weight_.ensure_grad();
    bias_.ensure_grad();
    kernels::parallel::deconv1d_backward_params(d, input.data(), grad_output.data(), weight_.grad(), bias_.grad());
    Tensor grad_input(input.shape());
    kernels::parallel::deconv1d_backward_data(d, grad_output.data(), weight_.data(), grad_input.data());
    return grad_input;
}

std::vector<NamedTensorRef> Deconv1d::named_parameters() {
    return {{"weight", &weight_}, {"bias", &bias_}};
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(std::size_t channels, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum), gamma_({channels}, 1.0), beta_({channels}, 0.0),
      running_mean_({channels}, 0.0), running_var_({channels}, 1.0) {
    if (channels == 0 || !(eps > 0.0) || !(momentum > 0.0)) {
        throw ConfigError("batchnorm1d: channels, eps and momentum must be positive");
    }
}

void BatchNorm1d::set_momentum(double momentum) {
    if (!(momentum > 0.0 && momentum <= 1.0)) throw ConfigError("batchnorm1d: momentum must lie in (0, 1]");
    momentum_ = momentum;
}

void BatchNorm1d::reset_running_stats() {
    running_mean_ = Tensor({channels_}, 0.0);
    running_var_ = Tensor({channels_}, 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& input, Mode mode) {
    if ((input.rank() != 2 && input.rank() != 3) || input.dim(1) != channels_) {
        throw DimensionError("batchnorm1d: expected input (batch x " + std::to_string(channels_) +
                             " [x length]), got " + shape_string(input.shape()));
    }
    const std::size_t batch = input.dim(0);
    const std::size_t length = input.rank() == 3 ? input.dim(2) : 1;
    const std::size_t count = batch * length;
    auto at = [&](std::size_t b, std::size_t c, std::size_t t) { return (b * channels_ + c) * length + t; };

    Tensor normalized(input.shape());
    Tensor out(input.shape());
    std::vector<double> inv_std(channels_);

    if (mode == Mode::Train) {
        if (count < 2) {
            throw UsageError("batchnorm1d: training mode needs more than one value per channel, got input " +
                             shape_string(input.shape()));
        }
        for (std::size_t c = 0; c < channels_; ++c) {
            double mean = 0.0;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < length; ++t) mean += input[at(b, c, t)];
            mean /= static_cast<double>(count);
            double var = 0.0;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < length; ++t) {
                    const double dx = input[at(b, c, t)] - mean;
                    var += dx * dx;
                }
            var /= static_cast<double>(count);
            inv_std[c] = 1.0 / std::sqrt(var + eps_);
            const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
            running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
            running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < length; ++t) {
                    const std::size_t i = at(b, c, t);
                    normalized[i] = (input[i] - mean) * inv_std[c];
                    out[i] = gamma_[c] * normalized[i] + beta_[c];
                }
        }
        cache_ = Cache{mode, input.shape(), std::move(normalized), std::move(inv_std)};
    } else {
        for (std::size_t c = 0; c < channels_; ++c) {
            inv_std[c] = 1.0 / std::sqrt(running_var_[c] + eps_);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < length; ++t) {
                    const std::size_t i = at(b, c, t);
                    out[i] = gamma_[c] * (input[i] - running_mean_[c]) * inv_std[c] + beta_[c];
                }
        }
    }
    return out;
}

Tensor BatchNorm1d::backward(const Tensor& grad_output) {
    if (!cache_) throw UsageError("batchnorm1d: backward called without a cached training-mode forward");
    const Cache& cache = *cache_;
    expect_shape("batchnorm1d backward", cache.shape, grad_output.shape());
    const std::size_t batch = cache.shape[0];
    const std::size_t length = cache.shape.size() == 3 ? cache.shape[2] : 1;
    const double n = static_cast<double>(batch * length);
    auto at = [&](std::size_t b, std::size_t c, std::size_t t) { return (b * channels_ + c) * length + t; };

    gamma_.ensure_grad();
    beta_.ensure_grad();
    Tensor grad_input(cache.shape);
    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < length; ++t) {
                const std::size_t i = at(b, c, t);
                sum_dy += grad_output[i];
                sum_dy_xhat += grad_output[i] * cache.normalized[i];
            }
        gamma_.grad()[c] += sum_dy_xhat;
        beta_.grad()[c] += sum_dy;
        const double scale = gamma_[c] * cache.inv_std[c];
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < length; ++t) {
                const std::size_t i = at(b, c, t);
                grad_input[i] = scale * (grad_output[i] - sum_dy / n - cache.normalized[i] * sum_dy_xhat / n);
            }
    }
    return grad_input;
}

std::vector<NamedTensorRef> BatchNorm1d::named_parameters() {
    return {{"gamma", &gamma_}, {"beta", &beta_}};
}

std::vector<NamedTensorRef> BatchNorm1d::named_buffers() {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& input, Mode mode) {
    Tensor out = input;
    std::vector<bool> mask(input.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        mask[i] = input[i] > 0.0;
        if (!mask[i]) out[i] = 0.0;
    }
    if (mode == Mode::Train) mask_ = std::move(mask);
    return out;
}

Tensor ReLU::backward(const Tensor& grad_output) {
    if (!mask_) throw UsageError("relu: backward called without a cached training-mode forward");
    if (mask_->size() != grad_output.size()) {
        throw DimensionError("relu backward: gradient has " + std::to_string(grad_output.size()) +
                             " elements, cached input had " + std::to_string(mask_->size()));
    }
    Tensor grad_input = grad_output;
    for (std::size_t i = 0; i < grad_input.size(); ++i)
        if (!(*mask_)[i]) grad_input[i] = 0.0;
    return grad_input;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng)
    : in_features_(in_features), out_features_(out_features), weight_({out_features, in_features}),
      bias_({out_features}) {
    if (in_features == 0 || out_features == 0) throw ConfigError("linear: feature counts must be positive");
    const double bound = std::sqrt(1.0 / static_cast<double>(in_features));
    init_uniform(weight_, bound, rng);
    init_uniform(bias_, bound, rng);
}

Tensor Linear::forward(const Tensor& input, Mode mode) {
    if (input.rank() != 2 || input.dim(1) != in_features_) {
        throw DimensionError("linear: expected input (batch x " + std::to_string(in_features_) + "), got " +
                             shape_string(input.shape()));
    }
    const kernels::LinearDims d{input.dim(0), in_features_, out_features_};
    Tensor out({d.batch, d.out_features});
    kernels::parallel::linear_forward(d, input.data(), weight_.data(), bias_.data(), out.data());
    if (mode == Mode::Train) input_ = input;
    return out;
}

Tensor Linear::backward(const Tensor& grad_output) {
    const Tensor& input = require_cache(input_, "linear");
    const kernels::LinearDims d{input.dim(0), in_features_, out_features_};
    expect_shape("linear backward", {d.batch, d.out_features}, grad_output.shape());
    weight_.ensure_grad();
    bias_.ensure_grad();
    kernels::parallel::linear_backward_params(d, input.data(), grad_output.data(), weight_.grad(), bias_.grad());
    Tensor grad_input(input.shape());
    kernels::parallel::linear_backward_data(d, grad_output.data(), weight_.data(), grad_input.data());
    return grad_input;
}

std::vector<NamedTensorRef> Linear::named_parameters() {
    return {{"weight", &weight_}, {"bias", &bias_}};
}

// ---------------------------------------------------------------------------
// Flatten / Unflatten

Tensor Flatten::forward(const Tensor& input, Mode mode) {
    if (input.rank() != 3 || input.dim(2) != 1) {
        throw DimensionError("flatten: expected input (batch x channels x 1), got " + shape_string(input.shape()));
    }
    if (mode == Mode::Train) input_shape_ = input.shape();
    return input.reshaped({input.dim(0), input.dim(1)});
}

Tensor Flatten::backward(const Tensor& grad_output) {
    if (!input_shape_) throw UsageError("flatten: backward called without a cached training-mode forward");
    return grad_output.reshaped(*input_shape_);
}

Tensor Unflatten::forward(const Tensor& input, Mode) {
    if (input.rank() == 3 && input.dim(2) == 1) return input;
    if (input.rank() != 2) {
        throw DimensionError("unflatten: expected input (batch x features) or (batch x features x 1), got " +
                             shape_string(input.shape()));
    }
    return input.reshaped({input.dim(0), input.dim(1), 1});
}

Tensor Unflatten::backward(const Tensor& grad_output) {
    if (grad_output.rank() != 3) {
        throw DimensionError("unflatten backward: expected rank-3 gradient, got " +
                             shape_string(grad_output.shape()));
    }
    return grad_output.reshaped({grad_output.dim(0), grad_output.dim(1)});
}

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case LayerKind::Conv1d:
            return std::make_unique<Conv1d>(spec.in_channels, spec.out_channels, spec.kernel, spec.stride, rng);
        case LayerKind::Deconv1d:
            return std::make_unique<Deconv1d>(spec.in_channels, spec.out_channels, spec.kernel, spec.stride,
                                              spec.output_padding, rng);
        case LayerKind::BatchNorm1d:
            return std::make_unique<BatchNorm1d>(spec.out_channels, spec.bn_eps, spec.bn_momentum);
        case LayerKind::ReLU: return std::make_unique<ReLU>();
        case LayerKind::Linear: return std::make_unique<Linear>(spec.in_channels, spec.out_channels, rng);
        case LayerKind::Flatten: return std::make_unique<Flatten>();
        case LayerKind::Unflatten: return std::make_unique<Unflatten>();
    }
    throw ConfigError("make_layer: unknown layer kind");
}

// ---------------------------------------------------------------------------
// Sequential

Sequential::Sequential(const Sequential& other) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
    if (this != &other) {
        Sequential copy(other);
        layers_ = std::move(copy.layers_);
    }
    return *this;
}

Tensor Sequential::forward(const Tensor& input, Mode mode) {
    Tensor x = input;
    for (auto& l : layers_) x = l->forward(x, mode);
    return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
    Tensor g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<Tensor*> Sequential::parameters() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (auto& [name, t] : l->named_parameters()) out.push_back(t);
    return out;
}

std::vector<NamedTensorRef> Sequential::named_parameters(const std::string& prefix) {
    std::vector<NamedTensorRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        for (auto& [name, t] : layers_[i]->named_parameters())
            out.emplace_back(prefix + "." + std::to_string(i) + "." + name, t);
    return out;
}

std::vector<NamedTensorRef> Sequential::named_buffers(const std::string& prefix) {
    std::vector<NamedTensorRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        for (auto& [name, t] : layers_[i]->named_buffers())
            out.emplace_back(prefix + "." + std::to_string(i) + "." + name, t);
    return out;
}

std::size_t Sequential::parameter_count() {
    std::size_t n = 0;
    for (Tensor* t : parameters()) n += t->size();
    return n;
}

void Sequential::zero_grad() {
    for (Tensor* t : parameters()) t->zero_grad();
}

void Sequential::clear_cache() {
    for (auto& l : layers_) l->clear_cache();
}

}  // namespace shmssl
