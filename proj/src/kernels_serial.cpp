#include "shmssl/kernels.hpp"

#include <algorithm>

namespace shmssl::kernels::serial {

void conv1d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_channels; ++o)
            for (std::size_t t = 0; t < d.out_length; ++t) {
                double acc = bias[o];
                for (std::size_t c = 0; c < d.in_channels; ++c)
                    for (std::size_t k = 0; k < d.kernel; ++k)
                        acc += weight[(o * d.in_channels + c) * d.kernel + k] *
                               input[(b * d.in_channels + c) * d.in_length + t * d.stride + k];
                output[(b * d.out_channels + o) * d.out_length + t] = acc;
            }
}

void conv1d_backward_data(const ConvDims& d, std::span<const double> grad_output,
                          std::span<const double> weight, std::span<double> grad_input) {
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_channels; ++o)
            for (std::size_t t = 0; t < d.out_length; ++t) {
                const double g = grad_output[(b * d.out_channels + o) * d.out_length + t];
                for (std::size_t c = 0; c < d.in_channels; ++c)
                    for (std::size_t k = 0; k < d.kernel; ++k)
                        grad_input[(b * d.in_channels + c) * d.in_length + t * d.stride + k] +=
                            weight[(o * d.in_channels + c) * d.kernel + k] * g;
            }
}

void conv1d_backward_params(const ConvDims& d, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_channels; ++o)
            for (std::size_t t = 0; t < d.out_length; ++t) {
                const double g = grad_output[(b * d.out_channels + o) * d.out_length + t];
                grad_bias[o] += g;
                for (std::size_t c = 0; c < d.in_channels; ++c)
                    for (std::size_t k = 0; k < d.kernel; ++k)
                        grad_weight[(o * d.in_channels + c) * d.kernel + k] +=
                            g * input[(b * d.in_channels + c) * d.in_length + t * d.stride + k];
            }
}

void deconv1d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weight,
                      std::span<const double> bias, std::span<double> output) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_channels; ++o)
            for (std::size_t j = 0; j < d.out_length; ++j)
                output[(b * d.out_channels + o) * d.out_length + j] = bias[o];
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t c = 0; c < d.in_channels; ++c)
            for (std::size_t t = 0; t < d.in_length; ++t) {
                const double x = input[(b * d.in_channels + c) * d.in_length + t];
                for (std::size_t o = 0; o < d.out_channels; ++o)
                    for (std::size_t k = 0; k < d.kernel; ++k)
                        output[(b * d.out_channels + o) * d.out_length + t * d.stride + k] +=
                            x * weight[(c * d.out_channels + o) * d.kernel + k];
            }
}

void deconv1d_backward_data(const ConvDims& d, std::span<const double> grad_output,
                            std::span<const double> weight, std::span<double> grad_input) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t c = 0; c < d.in_channels; ++c)
            for (std::size_t t = 0; t < d.in_length; ++t) {
                double acc = 0.0;
                for (std::size_t o = 0; o < d.out_channels; ++o)
                    for (std::size_t k = 0; k < d.kernel; ++k)
                        acc += weight[(c * d.out_channels + o) * d.kernel + k] *
                               grad_output[(b * d.out_channels + o) * d.out_length + t * d.stride + k];
                grad_input[(b * d.in_channels + c) * d.in_length + t] = acc;
            }
}

void deconv1d_backward_params(const ConvDims& d, std::span<const double> input,
                              std::span<const double> grad_output, std::span<double> grad_weight,
                              std::span<double> grad_bias) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_channels; ++o)
            for (std::size_t j = 0; j < d.out_length; ++j)
                grad_bias[o] += grad_output[(b * d.out_channels + o) * d.out_length + j];
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t c = 0; c < d.in_channels; ++c)
            for (std::size_t t = 0; t < d.in_length; ++t) {
                const double x = input[(b * d.in_channels + c) * d.in_length + t];
                for (std::size_t o = 0; o < d.out_channels; ++o)
                    for (std::size_t k = 0; k < d.kernel; ++k)
                        grad_weight[(c * d.out_channels + o) * d.kernel + k] +=
                            x * grad_output[(b * d.out_channels + o) * d.out_length + t * d.stride + k];
            }
}

void linear_forward(const LinearDims& d, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_features; ++o) {
            double acc = bias[o];
            for (std::size_t i = 0; i < d.in_features; ++i)
                acc += weight[o * d.in_features + i] * input[b * d.in_features + i];
            output[b * d.out_features + o] = acc;
        }
}

void linear_backward_data(const LinearDims& d, std::span<const double> grad_output,
                          std::span<const double> weight, std::span<double> grad_input) {
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_features; ++o)
            for (std::size_t i = 0; i < d.in_features; ++i)
                grad_input[b * d.in_features + i] +=
                    grad_output[b * d.out_features + o] * weight[o * d.in_features + i];
}

void linear_backward_params(const LinearDims& d, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_features; ++o) {
            const double g = grad_output[b * d.out_features + o];
            grad_bias[o] += g;
            for (std::size_t i = 0; i < d.in_features; ++i)
                grad_weight[o * d.in_features + i] += g * input[b * d.in_features + i];
        }
}

}  // namespace shmssl::kernels::serial
