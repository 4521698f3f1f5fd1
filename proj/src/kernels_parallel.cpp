#include "shmssl/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shmssl::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace parallel {

namespace {
using Index = std::int64_t;
inline Index idx(std::size_t n) { return static_cast<Index>(n); }


// Convolutions run as im2col + matrix products. A column matrix has one row
// per (channel, tap) pair and one column per (batch, position) pair:
//   col[(c * kernel + k) * n + b * positions + t] = x[b, c, t * stride + k]

struct Geometry {
    std::size_t batch;
    std::size_t channels;
    std::size_t length;
    std::size_t positions;
    std::size_t kernel;
    std::size_t stride;
    std::size_t columns() const { return batch * positions; }
};

void im2col(const Geometry& g, const double* src, double* col) {
    const std::size_t n = g.columns();
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < idx(g.channels); ++c) {
        const auto uc = static_cast<std::size_t>(c);
        for (std::size_t k = 0; k < g.kernel; ++k) {
            double* row = col + (uc * g.kernel + k) * n;
            for (std::size_t b = 0; b < g.batch; ++b) {
                const double* x = src + (b * g.channels + uc) * g.length + k;
                double* dst = row + b * g.positions;
                for (std::size_t t = 0; t < g.positions; ++t) dst[t] = x[t * g.stride];
            }
        }
    }
}

// dst[b, c, t * stride + k] += col[...]; every channel is owned by one thread.
void col2im_add(const Geometry& g, const double* col, double* dst) {
    const std::size_t n = g.columns();
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < idx(g.channels); ++c) {
        const auto uc = static_cast<std::size_t>(c);
        for (std::size_t k = 0; k < g.kernel; ++k) {
            const double* row = col + (uc * g.kernel + k) * n;
            for (std::size_t b = 0; b < g.batch; ++b) {
                double* y = dst + (b * g.channels + uc) * g.length + k;
                const double* src = row + b * g.positions;
                for (std::size_t t = 0; t < g.positions; ++t) y[t * g.stride] += src[t];
            }
        }
    }
}

// (batch, channels, positions) <-> (channels, batch * positions)
void to_channel_major(std::size_t batch, std::size_t channels, std::size_t positions, const double* src, double* dst) {
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c)
            std::copy_n(src + (b * channels + c) * positions, positions, dst + (c * batch + b) * positions);
}

void from_channel_major(std::size_t batch, std::size_t channels, std::size_t positions, const double* src, double* dst) {
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t b = 0; b < batch; ++b)
            std::copy_n(src + (c * batch + b) * positions, positions, dst + (b * channels + c) * positions);
}

__attribute__((target_clones("avx2", "default")))
void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// y += a0 x0 + a1 x1 + a2 x2 + a3 x3, reading and writing y once.
__attribute__((target_clones("avx2", "default")))
void axpy4(const double* a, const double* const* x, double* y, std::size_t n) {
    const double* x0 = x[0];
    const double* x1 = x[1];
    const double* x2 = x[2];
    const double* x3 = x[3];
    for (std::size_t i = 0; i < n; ++i) y[i] += (a[0] * x0[i] + a[1] * x1[i]) + (a[2] * x2[i] + a[3] * x3[i]);
}

__attribute__((target_clones("avx2", "default")))
double dot(const double* x, const double* y, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += x[i] * y[i];
        s1 += x[i + 1] * y[i + 1];
        s2 += x[i + 2] * y[i + 2];
        s3 += x[i + 3] * y[i + 3];
    }
    for (; i < n; ++i) s0 += x[i] * y[i];
    return (s0 + s1) + (s2 + s3);
}

// c (m x n) += a (m x k) * b (k x n)
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < idx(m); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            const double* rows[4] = {b + p * n, b + (p + 1) * n, b + (p + 2) * n, b + (p + 3) * n};
            axpy4(a + ui * k + p, rows, c + ui * n, n);
        }
        for (; p < k; ++p) axpy(a[ui * k + p], b + p * n, c + ui * n, n);
    }
}

// c (m x n) += a^T * b with a (k x m), b (k x n)
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < idx(m); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            const double coef[4] = {a[p * m + ui], a[(p + 1) * m + ui], a[(p + 2) * m + ui], a[(p + 3) * m + ui]};
            const double* rows[4] = {b + p * n, b + (p + 1) * n, b + (p + 2) * n, b + (p + 3) * n};
            axpy4(coef, rows, c + ui * n, n);
        }
        for (; p < k; ++p) axpy(a[p * m + ui], b + p * n, c + ui * n, n);
    }
}

// c (m x n) += a * b^T with a (m x k), b (n x k)
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
#pragma omp parallel for collapse(2) schedule(static)
    for (Index i = 0; i < idx(m); ++i)
        for (Index j = 0; j < idx(n); ++j)
            c[static_cast<std::size_t>(i * idx(n) + j)] +=
                dot(a + static_cast<std::size_t>(i) * k, b + static_cast<std::size_t>(j) * k, k);
}

Geometry conv_input_geometry(const ConvDims& d) {
    return {d.batch, d.in_channels, d.in_length, d.out_length, d.kernel, d.stride};
}

// For a transposed convolution the scattered side is the output.
Geometry deconv_output_geometry(const ConvDims& d) {
    return {d.batch, d.out_channels, d.out_length, d.in_length, d.kernel, d.stride};
}

void sum_rows(std::size_t rows, std::size_t n, const double* src, std::span<double> out) {
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += src[r * n + j];
        out[r] += s;
    }
}

}  // namespace

void conv1d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
    const Geometry g = conv_input_geometry(d);
    const std::size_t n = g.columns();
    const std::size_t ck = d.in_channels * d.kernel;
    std::vector<double> col(ck * n);
    im2col(g, input.data(), col.data());
    std::vector<double> y(d.out_channels * n);
    for (std::size_t o = 0; o < d.out_channels; ++o) std::fill_n(y.data() + o * n, n, bias[o]);
    gemm_nn(d.out_channels, ck, n, weight.data(), col.data(), y.data());
    from_channel_major(d.batch, d.out_channels, d.out_length, y.data(), output.data());
}

void conv1d_backward_data(const ConvDims& d, std::span<const double> grad_output,
                          std::span<const double> weight, std::span<double> grad_input) {
    const Geometry g = conv_input_geometry(d);
    const std::size_t n = g.columns();
    const std::size_t ck = d.in_channels * d.kernel;
    std::vector<double> gy(d.out_channels * n);
    to_channel_major(d.batch, d.out_channels, d.out_length, grad_output.data(), gy.data());
    std::vector<double> gcol(ck * n, 0.0);
    gemm_tn(ck, d.out_channels, n, weight.data(), gy.data(), gcol.data());
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    col2im_add(g, gcol.data(), grad_input.data());
}

void conv1d_backward_params(const ConvDims& d, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
    const Geometry g = conv_input_geometry(d);
    const std::size_t n = g.columns();
    const std::size_t ck = d.in_channels * d.kernel;
    std::vector<double> col(ck * n);
    im2col(g, input.data(), col.data());
    std::vector<double> gy(d.out_channels * n);
    to_channel_major(d.batch, d.out_channels, d.out_length, grad_output.data(), gy.data());
    gemm_nt(d.out_channels, n, ck, gy.data(), col.data(), grad_weight.data());
    sum_rows(d.out_channels, n, gy.data(), grad_bias);
}

void deconv1d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weight,
                      std::span<const double> bias, std::span<double> output) {
    const Geometry g = deconv_output_geometry(d);
    const std::size_t n = g.columns();
    const std::size_t ok = d.out_channels * d.kernel;
    std::vector<double> x(d.in_channels * n);
    to_channel_major(d.batch, d.in_channels, d.in_length, input.data(), x.data());
    std::vector<double> col(ok * n, 0.0);
    gemm_tn(ok, d.in_channels, n, weight.data(), x.data(), col.data());
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_channels; ++o)
            std::fill_n(output.data() + (b * d.out_channels + o) * d.out_length, d.out_length, bias[o]);
    col2im_add(g, col.data(), output.data());
}

void deconv1d_backward_data(const ConvDims& d, std::span<const double> grad_output,
                            std::span<const double> weight, std::span<double> grad_input) {
    const Geometry g = deconv_output_geometry(d);
    const std::size_t n = g.columns();
    const std::size_t ok = d.out_channels * d.kernel;
    std::vector<double> gcol(ok * n);
    im2col(g, grad_output.data(), gcol.data());
    std::vector<double> gx(d.in_channels * n, 0.0);
    gemm_nn(d.in_channels, ok, n, weight.data(), gcol.data(), gx.data());
    from_channel_major(d.batch, d.in_channels, d.in_length, gx.data(), grad_input.data());
}

void deconv1d_backward_params(const ConvDims& d, std::span<const double> input,
                              std::span<const double> grad_output, std::span<double> grad_weight,
                              std::span<double> grad_bias) {
    const Geometry g = deconv_output_geometry(d);
    const std::size_t n = g.columns();
    const std::size_t ok = d.out_channels * d.kernel;
    std::vector<double> gcol(ok * n);
    im2col(g, grad_output.data(), gcol.data());
    std::vector<double> x(d.in_channels * n);
    to_channel_major(d.batch, d.in_channels, d.in_length, input.data(), x.data());
    gemm_nt(d.in_channels, n, ok, x.data(), gcol.data(), grad_weight.data());
    for (std::size_t o = 0; o < d.out_channels; ++o) {
        double s = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* go = grad_output.data() + (b * d.out_channels + o) * d.out_length;
            for (std::size_t j = 0; j < d.out_length; ++j) s += go[j];
        }
        grad_bias[o] += s;
    }
}

void linear_forward(const LinearDims& d, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < idx(d.batch); ++b) {
        const double* x = input.data() + static_cast<std::size_t>(b) * d.in_features;
        double* y = output.data() + static_cast<std::size_t>(b) * d.out_features;
        for (std::size_t o = 0; o < d.out_features; ++o) {
            const double* w = weight.data() + o * d.in_features;
            double acc = bias[o];
            for (std::size_t i = 0; i < d.in_features; ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
    }
}

void linear_backward_data(const LinearDims& d, std::span<const double> grad_output,
                          std::span<const double> weight, std::span<double> grad_input) {
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < idx(d.batch); ++b) {
        const double* g = grad_output.data() + static_cast<std::size_t>(b) * d.out_features;
        double* gi = grad_input.data() + static_cast<std::size_t>(b) * d.in_features;
        std::fill(gi, gi + d.in_features, 0.0);
        for (std::size_t o = 0; o < d.out_features; ++o) {
            const double* w = weight.data() + o * d.in_features;
            const double go = g[o];
            for (std::size_t i = 0; i < d.in_features; ++i) gi[i] += go * w[i];
        }
    }
}

void linear_backward_params(const LinearDims& d, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
#pragma omp parallel for schedule(static)
    for (Index o = 0; o < idx(d.out_features); ++o) {
        const auto uo = static_cast<std::size_t>(o);
        double* gw = grad_weight.data() + uo * d.in_features;
        double gb = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double g = grad_output[b * d.out_features + uo];
            const double* x = input.data() + b * d.in_features;
            gb += g;
            for (std::size_t i = 0; i < d.in_features; ++i) gw[i] += g * x[i];
        }
        grad_bias[uo] += gb;
    }
}

}  // namespace parallel
}  // namespace shmssl::kernels
