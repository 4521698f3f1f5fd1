// Serial reference kernels against their OpenMP counterparts.

#include "shmssl/kernels.hpp"
#include "shmssl/reduction.hpp"
#include "shmssl/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace shmssl;
using kernels::ConvDims;
using kernels::LinearDims;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

// Second encoder stage at batch 32: 16 -> 32 channels, length 102 -> 34.
constexpr ConvDims kConv{32, 16, 32, 102, 3, 3, 34};
// Last decoder stage at batch 32: 16 -> 1 channel, length 102 -> 512.
constexpr ConvDims kDeconv{32, 16, 1, 102, 5, 5, 512};
constexpr LinearDims kLinear{32, 256, 256};

enum class Impl { Serial, Parallel };

template <Impl I>
void conv_forward(benchmark::State& state) {
    const ConvDims d = kConv;
    const auto x = random_vector(d.batch * d.in_channels * d.in_length, 1);
    const auto w = random_vector(d.out_channels * d.in_channels * d.kernel, 2);
    const auto b = random_vector(d.out_channels, 3);
    std::vector<double> y(d.batch * d.out_channels * d.out_length);
    for (auto _ : state) {
        if constexpr (I == Impl::Serial) kernels::serial::conv1d_forward(d, x, w, b, y);
        else kernels::parallel::conv1d_forward(d, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
}

template <Impl I>
void conv_backward(benchmark::State& state) {
    const ConvDims d = kConv;
    const auto x = random_vector(d.batch * d.in_channels * d.in_length, 1);
    const auto w = random_vector(d.out_channels * d.in_channels * d.kernel, 2);
    const auto gy = random_vector(d.batch * d.out_channels * d.out_length, 4);
    std::vector<double> gx(x.size()), gw(w.size()), gb(d.out_channels);
    for (auto _ : state) {
        if constexpr (I == Impl::Serial) {
            kernels::serial::conv1d_backward_data(d, gy, w, gx);
            kernels::serial::conv1d_backward_params(d, x, gy, gw, gb);
        } else {
            kernels::parallel::conv1d_backward_data(d, gy, w, gx);
            kernels::parallel::conv1d_backward_params(d, x, gy, gw, gb);
        }
        benchmark::DoNotOptimize(gx.data());
        benchmark::DoNotOptimize(gw.data());
    }
}

template <Impl I>
void deconv_forward(benchmark::State& state) {
    const ConvDims d = kDeconv;
    const auto x = random_vector(d.batch * d.in_channels * d.in_length, 1);
    const auto w = random_vector(d.in_channels * d.out_channels * d.kernel, 2);
    const auto b = random_vector(d.out_channels, 3);
    std::vector<double> y(d.batch * d.out_channels * d.out_length);
    for (auto _ : state) {
        if constexpr (I == Impl::Serial) kernels::serial::deconv1d_forward(d, x, w, b, y);
        else kernels::parallel::deconv1d_forward(d, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
}

template <Impl I>
void linear_forward(benchmark::State& state) {
    const LinearDims d = kLinear;
    const auto x = random_vector(d.batch * d.in_features, 1);
    const auto w = random_vector(d.out_features * d.in_features, 2);
    const auto b = random_vector(d.out_features, 3);
    std::vector<double> y(d.batch * d.out_features);
    for (auto _ : state) {
        if constexpr (I == Impl::Serial) kernels::serial::linear_forward(d, x, w, b, y);
        else kernels::parallel::linear_forward(d, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
}

std::vector<TimeSeriesSegment> segments(std::size_t n) {
    Rng rng(9);
    std::vector<TimeSeriesSegment> out(n);
    for (auto& s : out) {
        s.sample_rate_hz = 1.0;
        s.samples.resize(3600);
        for (double& v : s.samples) v = rng.normal();
    }
    return out;
}

template <Impl I>
void ierfh(benchmark::State& state) {
    const auto segs = segments(64);
    for (auto _ : state) {
        auto f = I == Impl::Serial ? serial::ierfh_batch(segs) : parallel::ierfh_batch(segs);
        benchmark::DoNotOptimize(f.data());
    }
}

}  // namespace

BENCHMARK(conv_forward<Impl::Serial>);
BENCHMARK(conv_forward<Impl::Parallel>);
BENCHMARK(conv_backward<Impl::Serial>);
BENCHMARK(conv_backward<Impl::Parallel>);
BENCHMARK(deconv_forward<Impl::Serial>);
BENCHMARK(deconv_forward<Impl::Parallel>);
BENCHMARK(linear_forward<Impl::Serial>);
BENCHMARK(linear_forward<Impl::Parallel>);
BENCHMARK(ierfh<Impl::Serial>);
BENCHMARK(ierfh<Impl::Parallel>);

BENCHMARK_MAIN();
