#include "shmssl/tensor.hpp"

#include "shmssl/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace shmssl {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("tensor: shape " + shape_string(shape_) + " holds " +
                             std::to_string(shape_size(shape_)) + " elements but " +
                             std::to_string(data_.size()) + " were given");
    }
}

Tensor Tensor::from(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::reshaped(Shape shape) const {
    Tensor t = *this;
    t.reshape(std::move(shape));
    return t;
}

void Tensor::reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
        throw DimensionError("reshape: cannot view " + shape_string(shape_) + " as " + shape_string(shape));
    }
    shape_ = std::move(shape);
}

std::span<double> Tensor::grad() {
    if (!grad_) throw UsageError("tensor has no gradient slot");
    return *grad_;
}

std::span<const double> Tensor::grad() const {
    if (!grad_) throw UsageError("tensor has no gradient slot");
    return *grad_;
}

void Tensor::ensure_grad() {
    if (!grad_) grad_.emplace(data_.size(), 0.0);
}

void Tensor::zero_grad() {
    if (grad_) {
        std::fill(grad_->begin(), grad_->end(), 0.0);
    } else {
        grad_.emplace(data_.size(), 0.0);
    }
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
    if (shape_.empty() || begin > end || end > shape_[0]) {
        throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") out of range for " + shape_string(shape_));
    }
    const std::size_t row = shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    Shape s = shape_;
    s[0] = end - begin;
    return Tensor(std::move(s), std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * row),
                                                    data_.begin() + static_cast<std::ptrdiff_t>(end * row)));
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) return Tensor();
    Shape s = parts.front().shape();
    if (s.empty()) throw DimensionError("concat_rows: scalar tensors cannot be stacked");
    std::size_t rows = 0;
    std::vector<double> data;
    for (const Tensor& p : parts) {
        if (p.rank() != s.size() || !std::equal(s.begin() + 1, s.end(), p.shape().begin() + 1)) {
            throw DimensionError("concat_rows: expected trailing shape of " + shape_string(s) + ", got " +
                                 shape_string(p.shape()));
        }
        rows += p.dim(0);
        data.insert(data.end(), p.data().begin(), p.data().end());
    }
    s[0] = rows;
    return Tensor(std::move(s), std::move(data));
}

void expect_shape(const std::string& where, const Shape& expected, const Shape& actual) {
    if (expected != actual) {
        throw DimensionError(where + ": expected shape " + shape_string(expected) + ", got " +
                             shape_string(actual));
    }
}

}  // namespace shmssl
