#include "shmssl/rng.hpp"

#include <cmath>
#include <numbers>

namespace shmssl {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

Rng::Rng(std::uint64_t seed) noexcept : key_(mix64(seed ^ kGolden)), counter_(0) {}

std::uint64_t Rng::next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

Rng Rng::split(std::uint64_t tag) const noexcept {
    return Rng(mix64(key_ ^ mix64(tag + kGolden)) + 0x632BE59BD9B4E019ULL, 0);
}

Rng Rng::split(std::string_view tag) const noexcept {
    // FNV-1a
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return split(h);
}

double Rng::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) noexcept {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t r = next_u64();
    while (r >= limit) {
        r = next_u64();
    }
    return static_cast<std::size_t>(r % bound);
}

double Rng::normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia & Tsang, with the U^(1/a) boost for shape < 1.
double Rng::gamma(double shape) noexcept {
    if (shape < 1.0) {
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v;
        }
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

double Rng::beta(double a, double b) noexcept {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    if (!(s > 0.0)) {
        // Both gamma draws underflowed; only possible for tiny shapes.
        return uniform() < a / (a + b) ? 1.0 : 0.0;
    }
    return x / s;
}

double Rng::student_t(double dof) noexcept {
    const double z = normal();
    const double chi2 = 2.0 * gamma(0.5 * dof);
    return z / std::sqrt(chi2 / dof);
}

}  // namespace shmssl
