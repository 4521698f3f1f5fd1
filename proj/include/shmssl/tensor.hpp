#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shmssl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient slot.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor from(std::initializer_list<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Same data, new shape with the same element count.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    bool has_grad() const noexcept { return grad_.has_value(); }
    std::span<double> grad();
    std::span<const double> grad() const;
    /// Allocates the gradient slot (zero-filled) if absent.
    void ensure_grad();
    void zero_grad();

    /// Rows [begin, end) along axis 0.
    Tensor slice_rows(std::size_t begin, std::size_t end) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<double> data_;
    std::optional<std::vector<double>> grad_;
};

/// Concatenate tensors along axis 0; trailing dimensions must agree.
Tensor concat_rows(std::span<const Tensor> parts);

/// Throws DimensionError naming `where` unless `actual` equals `expected`.
void expect_shape(const std::string& where, const Shape& expected, const Shape& actual);

}  // namespace shmssl
