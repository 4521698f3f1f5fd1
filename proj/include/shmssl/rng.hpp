#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace shmssl {

/// Counter-based splittable generator. Every draw is a pure function of
/// (key, counter), so a child stream obtained with split() is independent of
/// how many values the parent has produced. All randomness in the library
/// descends from one 64-bit master seed through split() tags.
///
/// Distributions are implemented here rather than taken from <random> so that
/// streams are bit-identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next_u64() noexcept;

    Rng split(std::uint64_t tag) const noexcept;
    Rng split(std::string_view tag) const noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on (0, 1).
    double uniform_open() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n) noexcept;

    double normal() noexcept;
    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
    double gamma(double shape) noexcept;
    double beta(double a, double b) noexcept;
    double student_t(double dof) noexcept;

    template <class T>
    void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    Rng(std::uint64_t key, std::uint64_t counter) noexcept : key_(key), counter_(counter) {}

    std::uint64_t key_;
    std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace shmssl
