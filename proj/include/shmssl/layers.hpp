#pragma once

#include "shmssl/rng.hpp"
#include "shmssl/tensor.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shmssl {

enum class Mode { Train, Eval };

enum class LayerKind { Conv1d, Deconv1d, BatchNorm1d, ReLU, Linear, Flatten, Unflatten };

const char* to_string(LayerKind kind);

/// Construction parameters for one layer. Fields a kind does not use are ignored.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t output_padding = 0;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;
};

/// Output length of a valid (zero-padding) convolution.
std::size_t conv1d_out_length(std::size_t in_length, std::size_t kernel, std::size_t stride);
std::size_t deconv1d_out_length(std::size_t in_length, std::size_t kernel, std::size_t stride,
                                std::size_t output_padding);

using NamedTensorRef = std::pair<std::string, Tensor*>;

/// A differentiable layer. forward() in Train mode caches what backward()
/// needs; backward() returns the input gradient and accumulates parameter
/// gradients into each parameter's grad slot.
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual Tensor forward(const Tensor& input, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_output) = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;

    /// Trainable tensors, in a stable order.
    virtual std::vector<NamedTensorRef> named_parameters() { return {}; }
    /// Non-trainable state (batchnorm running statistics).
    virtual std::vector<NamedTensorRef> named_buffers() { return {}; }

    /// Drops cached forward state.
    virtual void clear_cache() {}
};

class Conv1d final : public Layer {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride, Rng& rng);

    LayerKind kind() const override { return LayerKind::Conv1d; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }
    std::vector<NamedTensorRef> named_parameters() override;
    void clear_cache() override { input_.reset(); }

    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }

private:
    std::size_t in_channels_, out_channels_, kernel_, stride_;
    Tensor weight_;  // (out, in, kernel)
    Tensor bias_;    // (out)
    std::optional<Tensor> input_;
};

/// Transposed convolution; output length (L-1)*stride + kernel + output_padding.
class Deconv1d final : public Layer {
public:
    Deconv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
             std::size_t output_padding, Rng& rng);

    LayerKind kind() const override { return LayerKind::Deconv1d; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Deconv1d>(*this); }
    std::vector<NamedTensorRef> named_parameters() override;
    void clear_cache() override { input_.reset(); }

    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }

private:
    std::size_t in_channels_, out_channels_, kernel_, stride_, output_padding_;
    Tensor weight_;  // (in, out, kernel)
    Tensor bias_;    // (out)
    std::optional<Tensor> input_;
};

/// Batch normalization over (batch, length) per channel. Accepts (B, C, L) or (B, C).
class BatchNorm1d final : public Layer {
public:
    explicit BatchNorm1d(std::size_t channels, double eps = 1e-5, double momentum = 0.1);

    LayerKind kind() const override { return LayerKind::BatchNorm1d; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm1d>(*this); }
    std::vector<NamedTensorRef> named_parameters() override;
    std::vector<NamedTensorRef> named_buffers() override;
    void clear_cache() override { cache_.reset(); }

    Tensor& gamma() { return gamma_; }
    Tensor& beta() { return beta_; }
    const Tensor& running_mean() const { return running_mean_; }
    const Tensor& running_var() const { return running_var_; }
    double momentum() const noexcept { return momentum_; }
    void set_momentum(double momentum);
    /// Running mean 0, running variance 1.
    void reset_running_stats();

private:
    struct Cache {
        Mode mode;
        Shape shape;
        Tensor normalized;
        std::vector<double> inv_std;
    };

    std::size_t channels_;
    double eps_, momentum_;
    Tensor gamma_, beta_;
    Tensor running_mean_, running_var_;
    std::optional<Cache> cache_;
};

class ReLU final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::ReLU; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
    void clear_cache() override { mask_.reset(); }

private:
    std::optional<std::vector<bool>> mask_;
};

/// y = x W^T + b on (B, in) inputs.
class Linear final : public Layer {
public:
    Linear(std::size_t in_features, std::size_t out_features, Rng& rng);

    LayerKind kind() const override { return LayerKind::Linear; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
    std::vector<NamedTensorRef> named_parameters() override;
    void clear_cache() override { input_.reset(); }

    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }

private:
    std::size_t in_features_, out_features_;
    Tensor weight_;  // (out, in)
    Tensor bias_;    // (out)
    std::optional<Tensor> input_;
};

/// (B, C, 1) -> (B, C)
class Flatten final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::Flatten; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
    void clear_cache() override { input_shape_.reset(); }

private:
    std::optional<Shape> input_shape_;
};

/// (B, C) -> (B, C, 1)
class Unflatten final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::Unflatten; }
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_output) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Unflatten>(*this); }
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Rng& rng);

/// Ordered chain of layers with value semantics (copies deep-clone layers).
class Sequential {
public:
    Sequential() = default;
    Sequential(const Sequential& other);
    Sequential& operator=(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& input, Mode mode);
    Tensor backward(const Tensor& grad_output);

    std::vector<Tensor*> parameters();
    std::vector<NamedTensorRef> named_parameters(const std::string& prefix);
    std::vector<NamedTensorRef> named_buffers(const std::string& prefix);
    std::size_t parameter_count();
    void zero_grad();
    void clear_cache();

    std::size_t size() const noexcept { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace shmssl
