#pragma once

#include "shmssl/tensor.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace shmssl {

/// A scalar objective over some tensors. `loss` evaluates it; `gradient`
/// evaluates it and writes d(loss)/d(t) into the grad slot of every checked
/// tensor (overwriting, not accumulating).
struct Objective {
    std::function<double()> loss;
    std::function<double()> gradient;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;

    bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// Compares analytic gradients with central differences for every element of
/// every tensor in `wrt`. The relative error of one element is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport gradient_check(const std::vector<std::pair<std::string, Tensor*>>& wrt, const Objective& objective,
                               double step = 1e-4);

}  // namespace shmssl
