#include "checks.hpp"

#include "shmssl/losses.hpp"
#include "shmssl/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

namespace shmssl::checks {

Tensor sin_tensor(Shape shape, double a, double b) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::sin(a * static_cast<double>(i) + b);
    return t;
}

Tensor normal_tensor(Shape shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal();
    return t;
}

namespace {

std::vector<double> row(const Tensor& t, std::size_t i) {
    const std::size_t d = t.dim(1);
    return {t.data().begin() + static_cast<std::ptrdiff_t>(i * d),
            t.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d)};
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    return uv / std::sqrt(uu * vv);
}

}  // namespace

double naive_simclr(const Tensor& view1, const Tensor& view2, double temperature) {
    const std::size_t b = view1.dim(0);
    // Interleave as z_1, z'_1, z_2, z'_2, ... so the positive of 2k is 2k+1.
    std::vector<std::vector<double>> z;
    for (std::size_t i = 0; i < b; ++i) {
        z.push_back(row(view1, i));
        z.push_back(row(view2, i));
    }
    auto pair_loss = [&](std::size_t i, std::size_t j) {
        double denom = 0.0;
        for (std::size_t k = 0; k < 2 * b; ++k) {
            if (k != i) denom += std::exp(cosine(z[i], z[k]) / temperature);
        }
        return -std::log(std::exp(cosine(z[i], z[j]) / temperature) / denom);
    };
    double total = 0.0;
    for (std::size_t k = 0; k < b; ++k) total += pair_loss(2 * k, 2 * k + 1) + pair_loss(2 * k + 1, 2 * k);
    return total / (2.0 * static_cast<double>(b));
}

double naive_mixup(const Tensor& view1, const Tensor& mixed, const Tensor& view2, std::span<const double> lambdas,
                   double temperature) {
    const std::size_t b = view1.dim(0);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const auto m = row(mixed, i);
        double denom = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            denom += std::exp(cosine(m, row(view1, j)) / temperature);
            denom += std::exp(cosine(m, row(view2, j)) / temperature);
        }
        const double p1 = std::exp(cosine(m, row(view1, i)) / temperature) / denom;
        const double p2 = std::exp(cosine(m, row(view2, i)) / temperature) / denom;
        total += -(lambdas[i] * std::log(p1) + (1.0 - lambdas[i]) * std::log(p2));
    }
    return total / static_cast<double>(b);
}

double naive_gan_discriminator(std::span<const double> d_real, std::span<const double> d_fake) {
    double total = 0.0;
    for (std::size_t i = 0; i < d_real.size(); ++i) total += -std::log(d_real[i]) - std::log(1.0 - d_fake[i]);
    return total / static_cast<double>(d_real.size());
}

double naive_gan_generator(std::span<const double> d_fake) {
    double total = 0.0;
    for (double d : d_fake) total += -std::log(d);
    return total / static_cast<double>(d_fake.size());
}

std::string name_of(LayerCase c) {
    switch (c) {
        case LayerCase::Conv1d: return "conv1d";
        case LayerCase::Deconv1d: return "deconv1d";
        case LayerCase::BatchNorm1d: return "batchnorm1d";
        case LayerCase::ReLU: return "relu";
        case LayerCase::Linear: return "linear";
    }
    return "?";
}

std::string name_of(LossCase c) {
    switch (c) {
        case LossCase::Reconstruction: return "reconstruction";
        case LossCase::SimClr: return "simclr";
        case LossCase::Mixup: return "mixup";
        case LossCase::GanDiscriminator: return "gan_discriminator";
        case LossCase::GanGenerator: return "gan_generator";
        case LossCase::CrossEntropy: return "cross_entropy";
    }
    return "?";
}

GradCheckReport check_layer(LayerCase c, std::uint64_t seed) {
    Rng rng = Rng(seed).split("layer-check").split(static_cast<std::uint64_t>(c));
    std::unique_ptr<Layer> layer;
    Tensor x;
    switch (c) {
        case LayerCase::Conv1d:
            layer = std::make_unique<Conv1d>(2, 3, 3, 2, rng);
            x = normal_tensor({2, 2, 9}, rng);
            break;
        case LayerCase::Deconv1d:
            layer = std::make_unique<Deconv1d>(2, 3, 3, 2, 1, rng);
            x = normal_tensor({2, 2, 4}, rng);
            break;
        case LayerCase::BatchNorm1d: {
            auto bn = std::make_unique<BatchNorm1d>(3);
            for (std::size_t i = 0; i < 3; ++i) {
                bn->gamma()[i] = rng.uniform(0.5, 1.5);
                bn->beta()[i] = rng.normal();
            }
            layer = std::move(bn);
            x = normal_tensor({4, 3, 5}, rng);
            break;
        }
        case LayerCase::ReLU:
            layer = std::make_unique<ReLU>();
            x = normal_tensor({3, 8}, rng);
            // Keep inputs away from the kink so central differences stay on one side.
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += x[i] >= 0.0 ? 0.05 : -0.05;
            break;
        case LayerCase::Linear:
            layer = std::make_unique<Linear>(4, 3, rng);
            x = normal_tensor({3, 4}, rng);
            break;
    }
    const Shape out_shape = layer->forward(x, Mode::Train).shape();
    const Tensor w = normal_tensor(out_shape, rng);

    auto value = [&] {
        const Tensor y = layer->forward(x, Mode::Train);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
        return s;
    };
    std::vector<std::pair<std::string, Tensor*>> wrt{{"input", &x}};
    for (auto& p : layer->named_parameters()) wrt.push_back(p);
    for (auto& [name, t] : wrt) t->ensure_grad();

    Objective objective;
    objective.loss = value;
    objective.gradient = [&] {
        for (auto& p : layer->named_parameters()) p.second->zero_grad();
        const double v = value();
        const Tensor gx = layer->backward(w);
        std::copy(gx.data().begin(), gx.data().end(), x.grad().begin());
        return v;
    };
    return gradient_check(wrt, objective);
}

GradCheckReport check_loss(LossCase c, std::uint64_t seed) {
    Rng rng = Rng(seed).split("loss-check").split(static_cast<std::uint64_t>(c));
    const std::size_t b = 1 + rng.below(5);
    std::vector<Tensor> args;
    std::function<double()> value;
    std::function<double()> gradient;

    auto write_grads = [&args](const std::vector<Tensor>& grads) {
        for (std::size_t k = 0; k < grads.size(); ++k) {
            std::copy(grads[k].data().begin(), grads[k].data().end(), args[k].grad().begin());
        }
    };

    switch (c) {
        case LossCase::Reconstruction: {
            args = {normal_tensor({b, 1, 16}, rng)};
            const Tensor target = normal_tensor({b, 1, 16}, rng);
            value = [&args, target] { return ae_loss(args[0], target).value; };
            gradient = [&args, target, write_grads] {
                const LossGrad lg = ae_loss(args[0], target);
                write_grads({lg.grad});
                return lg.value;
            };
            break;
        }
        case LossCase::SimClr: {
            const std::size_t bb = b + 1;
            args = {normal_tensor({bb, 6}, rng), normal_tensor({bb, 6}, rng)};
            value = [&args] { return simclr_loss(args[0], args[1], 0.5).value; };
            gradient = [&args, write_grads] {
                const ContrastiveLoss l = simclr_loss(args[0], args[1], 0.5);
                write_grads(l.grads);
                return l.value;
            };
            break;
        }
        case LossCase::Mixup: {
            args = {normal_tensor({b, 6}, rng), normal_tensor({b, 6}, rng), normal_tensor({b, 6}, rng)};
            std::vector<double> lambdas(b);
            for (double& l : lambdas) l = rng.beta(0.2, 0.2);
            value = [&args, lambdas] { return mixup_loss(args[0], args[1], args[2], lambdas, 0.1).value; };
            gradient = [&args, lambdas, write_grads] {
                const ContrastiveLoss l = mixup_loss(args[0], args[1], args[2], lambdas, 0.1);
                write_grads(l.grads);
                return l.value;
            };
            break;
        }
        case LossCase::GanDiscriminator: {
            args = {normal_tensor({b, 1}, rng, 2.0), normal_tensor({b, 1}, rng, 2.0)};
            value = [&args] { return gan_discriminator_loss(args[0], args[1]).value; };
            gradient = [&args, write_grads] {
                const ContrastiveLoss l = gan_discriminator_loss(args[0], args[1]);
                write_grads(l.grads);
                return l.value;
            };
            break;
        }
        case LossCase::GanGenerator: {
            args = {normal_tensor({b, 1}, rng, 2.0)};
            value = [&args] { return gan_generator_loss(args[0]).value; };
            gradient = [&args, write_grads] {
                const ContrastiveLoss l = gan_generator_loss(args[0]);
                write_grads(l.grads);
                return l.value;
            };
            break;
        }
        case LossCase::CrossEntropy: {
            args = {normal_tensor({b, 5}, rng, 2.0)};
            std::vector<int> labels(b);
            for (int& y : labels) y = static_cast<int>(rng.below(5));
            value = [&args, labels] { return softmax_cross_entropy(args[0], labels).value; };
            gradient = [&args, labels, write_grads] {
                const LossGrad lg = softmax_cross_entropy(args[0], labels);
                write_grads({lg.grad});
                return lg.value;
            };
            break;
        }
    }

    std::vector<std::pair<std::string, Tensor*>> wrt;
    for (std::size_t k = 0; k < args.size(); ++k) {
        args[k].ensure_grad();
        wrt.emplace_back("arg" + std::to_string(k), &args[k]);
    }
    return gradient_check(wrt, Objective{value, gradient});
}

double MixingRatioResult::relative_error() const { return std::abs(ratio / expected - 1.0); }

MixingRatioResult minimize_mixing_objective(double lambda, std::span<const double> negatives, double temperature) {
    const std::size_t half = negatives.size() / 2;
    std::vector<double> to1{0.0}, to2{0.0};
    to1.insert(to1.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(half));
    to2.insert(to2.end(), negatives.begin() + static_cast<std::ptrdiff_t>(half), negatives.end());

    auto objective = [&](double s1, double s2) {
        to1[0] = s1;
        to2[0] = s2;
        return mixup_sample_loss(lambda, to1, to2, 0, temperature);
    };
    auto clamp = [](double s) { return std::clamp(s, -1.0, 1.0); };

    // The Hessian is bounded by 1 / tau^2, so a step of tau^2 / 2 is stable.
    const double step = 0.5 * temperature * temperature;
    const double h = 1e-6;
    double s1 = 0.0, s2 = 0.0;
    for (int it = 0; it < 200000; ++it) {
        const double g1 = (objective(s1 + h, s2) - objective(s1 - h, s2)) / (2 * h);
        const double g2 = (objective(s1, s2 + h) - objective(s1, s2 - h)) / (2 * h);
        const double n1 = clamp(s1 - step * g1);
        const double n2 = clamp(s2 - step * g2);
        const bool still = std::abs(n1 - s1) < 1e-14 && std::abs(n2 - s2) < 1e-14;
        s1 = n1;
        s2 = n2;
        if (still) break;
    }
    MixingRatioResult r;
    r.s1 = s1;
    r.s2 = s2;
    r.ratio = std::exp((s1 - s2) / temperature);
    r.expected = lambda / (1.0 - lambda);
    return r;
}

}  // namespace shmssl::checks
