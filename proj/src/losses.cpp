#include "shmssl/losses.hpp"

#include "shmssl/error.hpp"

#include <algorithm>
#include <cmath>

namespace shmssl {

namespace {

void require_finite(const Tensor& t, const char* where) {
    if (!t.all_finite()) throw NumericError(std::string(where) + ": non-finite input");
}

std::size_t row_length(const Tensor& t, const char* where) {
    if (t.rank() == 0 || t.shape().back() == 0) {
        throw DimensionError(std::string(where) + ": last dimension must be at least 1, got " +
                             shape_string(t.shape()));
    }
    return t.shape().back();
}

}  // namespace

Tensor softmax(const Tensor& logits) {
    require_finite(logits, "softmax");
    const std::size_t k = row_length(logits, "softmax");
    Tensor out = logits;
    for (std::size_t r = 0; r < out.size() / k; ++r) {
        double* row = out.data().data() + r * k;
        const double m = *std::max_element(row, row + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = std::exp(row[j] - m);
            sum += row[j];
        }
        for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
    }
    return out;
}

Tensor log_softmax(const Tensor& logits) {
    require_finite(logits, "log_softmax");
    const std::size_t k = row_length(logits, "log_softmax");
    Tensor out = logits;
    for (std::size_t r = 0; r < out.size() / k; ++r) {
        double* row = out.data().data() + r * k;
        const double m = *std::max_element(row, row + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - m);
        const double lse = m + std::log(sum);
        for (std::size_t j = 0; j < k; ++j) row[j] -= lse;
    }
    return out;
}

LossGrad mse_loss(const Tensor& prediction, const Tensor& target) {
    expect_shape("mse_loss", target.shape(), prediction.shape());
    if (prediction.rank() == 0 || prediction.dim(0) == 0) throw DimensionError("mse_loss: empty batch");
    const double batch = static_cast<double>(prediction.dim(0));
    LossGrad out{0.0, Tensor(prediction.shape())};
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double diff = prediction[i] - target[i];
        out.value += diff * diff;
        out.grad[i] = 2.0 * diff / batch;
    }
    out.value /= batch;
    return out;
}

LossGrad softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) {
        throw DimensionError("softmax_cross_entropy: expected logits (batch x K), got " +
                             shape_string(logits.shape()));
    }
    const std::size_t batch = logits.dim(0);
    const std::size_t k = logits.dim(1);
    if (labels.size() != batch) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                             std::to_string(batch));
    }
    if (batch == 0) throw DimensionError("softmax_cross_entropy: empty batch");
    const Tensor logp = log_softmax(logits);
    LossGrad out{0.0, Tensor(logits.shape())};
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw InputError("softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                             std::to_string(k) + ")");
        }
        out.value -= logp[b * k + static_cast<std::size_t>(y)];
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(logp[b * k + j]);
            out.grad[b * k + j] = (p - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv_b;
        }
    }
    out.value *= inv_b;
    return out;
}

double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace shmssl
