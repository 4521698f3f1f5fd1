#pragma once

#include <cstddef>
#include <span>

// Hot loops of the network layers. Two implementations with identical
// signatures:
//   serial::   direct textbook loops, kept as the reference for tests
//   parallel:: OpenMP owner-computes loops; each output element is summed by
//              exactly one thread in a fixed order, so results do not depend
//              on the thread count.
// Layouts are row-major (batch, channel, length). Weight layouts follow the
// usual conventions: conv (out, in, k), transposed conv (in, out, k),
// linear (out, in).
//
// Data-gradient kernels overwrite their output; parameter-gradient kernels
// accumulate into theirs.

namespace shmssl::kernels {

struct ConvDims {
    std::size_t batch;
    std::size_t in_channels;
    std::size_t out_channels;
    std::size_t in_length;
    std::size_t kernel;
    std::size_t stride;
    std::size_t out_length;
};

struct LinearDims {
    std::size_t batch;
    std::size_t in_features;
    std::size_t out_features;
};

#define SHMSSL_KERNEL_DECLS                                                                        \
    void conv1d_forward(const ConvDims& d, std::span<const double> input,                          \
                        std::span<const double> weight, std::span<const double> bias,              \
                        std::span<double> output);                                                 \
    void conv1d_backward_data(const ConvDims& d, std::span<const double> grad_output,              \
                              std::span<const double> weight, std::span<double> grad_input);       \
    void conv1d_backward_params(const ConvDims& d, std::span<const double> input,                  \
                                std::span<const double> grad_output, std::span<double> grad_weight, \
                                std::span<double> grad_bias);                                      \
    void deconv1d_forward(const ConvDims& d, std::span<const double> input,                        \
                          std::span<const double> weight, std::span<const double> bias,            \
                          std::span<double> output);                                               \
    void deconv1d_backward_data(const ConvDims& d, std::span<const double> grad_output,            \
                                std::span<const double> weight, std::span<double> grad_input);     \
    void deconv1d_backward_params(const ConvDims& d, std::span<const double> input,                \
                                  std::span<const double> grad_output,                             \
                                  std::span<double> grad_weight, std::span<double> grad_bias);     \
    void linear_forward(const LinearDims& d, std::span<const double> input,                        \
                        std::span<const double> weight, std::span<const double> bias,              \
                        std::span<double> output);                                                 \
    void linear_backward_data(const LinearDims& d, std::span<const double> grad_output,            \
                              std::span<const double> weight, std::span<double> grad_input);       \
    void linear_backward_params(const LinearDims& d, std::span<const double> input,                \
                                std::span<const double> grad_output, std::span<double> grad_weight, \
                                std::span<double> grad_bias);

namespace serial {
SHMSSL_KERNEL_DECLS
}  // namespace serial

namespace parallel {
SHMSSL_KERNEL_DECLS
}  // namespace parallel

#undef SHMSSL_KERNEL_DECLS

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace shmssl::kernels
