#include "shmssl/gradcheck.hpp"

#include "shmssl/error.hpp"

#include <algorithm>
#include <cmath>

namespace shmssl {

GradCheckReport gradient_check(const std::vector<std::pair<std::string, Tensor*>>& wrt, const Objective& objective,
                               double step) {
    GradCheckReport report;
    if (wrt.empty()) return report;

    for (auto& [name, t] : wrt) t->zero_grad();
    const double base = objective.gradient();
    if (!std::isfinite(base)) throw NumericError("gradient_check: non-finite loss at the base point");

    std::vector<std::vector<double>> analytic;
    analytic.reserve(wrt.size());
    for (auto& [name, t] : wrt) {
        auto g = std::as_const(*t).grad();
        analytic.emplace_back(g.begin(), g.end());
    }

    for (std::size_t p = 0; p < wrt.size(); ++p) {
        Tensor& t = *wrt[p].second;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double saved = t[i];
            t[i] = saved + step;
            const double plus = objective.loss();
            t[i] = saved - step;
            const double minus = objective.loss();
            t[i] = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw NumericError("gradient_check: non-finite loss while perturbing " + wrt[p].first + "[" +
                                   std::to_string(i) + "]");
            }
            const double numeric = (plus - minus) / (2.0 * step);
            const double a = analytic[p][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double err = std::abs(a - numeric) / denom;
            ++report.checked;
            if (err > report.max_relative_error) {
                report.max_relative_error = err;
                report.worst_tensor = wrt[p].first;
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace shmssl
