#include "shmssl/ssl.hpp"

#include "shmssl/adam.hpp"
#include "shmssl/batching.hpp"
#include "shmssl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace shmssl {

namespace {

// Row-normalized copy of a (N x d) embedding batch.
struct UnitRows {
    Tensor unit;
    std::vector<double> norm;
};

UnitRows normalize_rows(const Tensor& z, const char* where) {
    if (!z.all_finite()) throw NumericError(std::string(where) + ": non-finite embedding");
    const std::size_t n = z.dim(0);
    const std::size_t d = z.dim(1);
    UnitRows out{z, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += z[i * d + j] * z[i * d + j];
        const double norm = std::sqrt(s);
        if (!(norm > 0.0)) {
            throw NumericError(std::string(where) + ": embedding " + std::to_string(i) + " has zero norm");
        }
        out.norm[i] = norm;
        for (std::size_t j = 0; j < d; ++j) out.unit[i * d + j] /= norm;
    }
    return out;
}

// Gradient through u = z / |z|: dz = (du - u (u . du)) / |z|.
Tensor unnormalize_grad(const Tensor& grad_unit, const UnitRows& rows) {
    const std::size_t n = grad_unit.dim(0);
    const std::size_t d = grad_unit.dim(1);
    Tensor out(grad_unit.shape());
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += rows.unit[i * d + j] * grad_unit[i * d + j];
        for (std::size_t j = 0; j < d; ++j)
            out[i * d + j] = (grad_unit[i * d + j] - rows.unit[i * d + j] * dot) / rows.norm[i];
    }
    return out;
}

double row_dot(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    const std::size_t d = a.dim(1);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a[i * d + k] * b[j * d + k];
    return s;
}

// out_row(i) += scale * b_row(j)
void add_row(Tensor& out, std::size_t i, const Tensor& b, std::size_t j, double scale) {
    const std::size_t d = out.dim(1);
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] += scale * b[j * d + k];
}

void require_embeddings(const char* where, const Tensor& t) {
    if (t.rank() != 2 || t.dim(0) == 0 || t.dim(1) == 0) {
        throw DimensionError(std::string(where) + ": expected a non-empty (batch x dim) embedding batch, got " +
                             shape_string(t.shape()));
    }
}

void require_temperature(double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

}  // namespace

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DimensionError("cosine_sim: lengths " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (!(nu > 0.0) || !(nv > 0.0)) throw NumericError("cosine_sim: zero-norm vector");
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

LossGrad ae_loss(const Tensor& reconstruction, const Tensor& input) {
    return mse_loss(reconstruction, input);
}

double ae_loss(ModelBundle& bundle, const Tensor& input) {
    const Tensor recon = forward_chain(bundle, {net::kEncoder, net::kDecoder}, input, Mode::Eval);
    return mse_loss(recon, input).value;
}

ContrastiveLoss simclr_loss(const Tensor& view1, const Tensor& view2, double temperature) {
    require_temperature(temperature);
    require_embeddings("simclr_loss", view1);
    expect_shape("simclr_loss", view1.shape(), view2.shape());
    const std::size_t b = view1.dim(0);
    const std::size_t n = 2 * b;
    const Tensor both[] = {view1, view2};
    const UnitRows rows = normalize_rows(concat_rows(both), "simclr_loss");
    const Tensor& u = rows.unit;

    std::vector<double> sim(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t k = 0; k < n; ++k) sim[a * n + k] = row_dot(u, a, u, k) / temperature;

    // weight[a][k] = d loss / d sim[a][k]
    std::vector<double> weight(n * n, 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t pos = (a + b) % n;
        double m = -INFINITY;
        for (std::size_t k = 0; k < n; ++k)
            if (k != a) m = std::max(m, sim[a * n + k]);
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (k != a) s += std::exp(sim[a * n + k] - m);
        const double lse = m + std::log(s);
        total += lse - sim[a * n + pos];
        for (std::size_t k = 0; k < n; ++k)
            if (k != a) weight[a * n + k] = std::exp(sim[a * n + k] - lse) / static_cast<double>(n);
        weight[a * n + pos] -= 1.0 / static_cast<double>(n);
    }

    Tensor grad_unit(u.shape());
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t k = 0; k < n; ++k) {
            const double w = (weight[a * n + k] + weight[k * n + a]) / temperature;
            if (w != 0.0) add_row(grad_unit, a, u, k, w);
        }
    const Tensor grad = unnormalize_grad(grad_unit, rows);
    return {total / static_cast<double>(n), {grad.slice_rows(0, b), grad.slice_rows(b, n)}};
}

double mixup_sample_loss(double lambda, std::span<const double> sims_to_view1, std::span<const double> sims_to_view2,
                         std::size_t i, double temperature) {
    require_temperature(temperature);
    if (sims_to_view1.size() != sims_to_view2.size() || i >= sims_to_view1.size()) {
        throw DimensionError("mixup_sample_loss: similarity rows must have equal length greater than the anchor index");
    }
    double m = -INFINITY;
    for (double s : sims_to_view1) m = std::max(m, s / temperature);
    for (double s : sims_to_view2) m = std::max(m, s / temperature);
    double sum = 0.0;
    for (double s : sims_to_view1) sum += std::exp(s / temperature - m);
    for (double s : sims_to_view2) sum += std::exp(s / temperature - m);
    const double lse = m + std::log(sum);
    return -lambda * (sims_to_view1[i] / temperature - lse) - (1.0 - lambda) * (sims_to_view2[i] / temperature - lse);
}

ContrastiveLoss mixup_loss(const Tensor& view1, const Tensor& mixed, const Tensor& view2,
                           std::span<const double> lambdas, double temperature) {
    require_temperature(temperature);
    require_embeddings("mixup_loss", view1);
    expect_shape("mixup_loss (mixed)", view1.shape(), mixed.shape());
    expect_shape("mixup_loss (view2)", view1.shape(), view2.shape());
    const std::size_t b = view1.dim(0);
    if (lambdas.size() != b) {
        throw DimensionError("mixup_loss: " + std::to_string(lambdas.size()) + " mixing ratios for batch of " +
                             std::to_string(b));
    }
    const UnitRows r1 = normalize_rows(view1, "mixup_loss");
    const UnitRows rm = normalize_rows(mixed, "mixup_loss");
    const UnitRows r2 = normalize_rows(view2, "mixup_loss");

    Tensor g1(view1.shape()), gm(view1.shape()), g2(view1.shape());
    std::vector<double> s1(b), s2(b);
    double total = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double lambda = lambdas[i];
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw NumericError("mixup_loss: mixing ratio outside [0, 1]");
        for (std::size_t j = 0; j < b; ++j) {
            s1[j] = row_dot(rm.unit, i, r1.unit, j);
            s2[j] = row_dot(rm.unit, i, r2.unit, j);
        }
        total += mixup_sample_loss(lambda, s1, s2, i, temperature);

        double m = -INFINITY;
        for (std::size_t j = 0; j < b; ++j) m = std::max({m, s1[j] / temperature, s2[j] / temperature});
        double sum = 0.0;
        for (std::size_t j = 0; j < b; ++j) sum += std::exp(s1[j] / temperature - m) + std::exp(s2[j] / temperature - m);
        const double lse = m + std::log(sum);
        for (std::size_t j = 0; j < b; ++j) {
            const double w1 = (std::exp(s1[j] / temperature - lse) - (j == i ? lambda : 0.0)) * inv_b / temperature;
            const double w2 = (std::exp(s2[j] / temperature - lse) - (j == i ? 1.0 - lambda : 0.0)) * inv_b / temperature;
            add_row(gm, i, r1.unit, j, w1);
            add_row(gm, i, r2.unit, j, w2);
            add_row(g1, j, rm.unit, i, w1);
            add_row(g2, j, rm.unit, i, w2);
        }
    }
    return {total * inv_b, {unnormalize_grad(g1, r1), unnormalize_grad(gm, rm), unnormalize_grad(g2, r2)}};
}

GanLoss gan_loss(std::span<const double> d_real, std::span<const double> d_fake) {
    if (d_real.size() != d_fake.size() || d_real.empty()) {
        throw DimensionError("gan_loss: real and fake batches must be non-empty and of equal size");
    }
    GanLoss out;
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        const double r = d_real[i];
        const double f = d_fake[i];
        if (!(r > 0.0 && r < 1.0) || !(f > 0.0 && f < 1.0)) {
            throw NumericError("gan_loss: discriminator output outside (0, 1) at sample " + std::to_string(i));
        }
        out.discriminator += -std::log(r) - std::log1p(-f);
        out.generator += -std::log(f);
    }
    const auto n = static_cast<double>(d_real.size());
    out.discriminator /= n;
    out.generator /= n;
    return out;
}

ContrastiveLoss gan_discriminator_loss(const Tensor& real_logits, const Tensor& fake_logits) {
    if (real_logits.size() != fake_logits.size() || real_logits.empty()) {
        throw DimensionError("gan_discriminator_loss: real and fake batches must be non-empty and of equal size");
    }
    if (!real_logits.all_finite() || !fake_logits.all_finite()) throw NumericError("gan_discriminator_loss: non-finite logit");
    const auto n = static_cast<double>(real_logits.size());
    ContrastiveLoss out{0.0, {Tensor(real_logits.shape()), Tensor(fake_logits.shape())}};
    for (std::size_t i = 0; i < real_logits.size(); ++i) {
        // -log sigmoid(r) = softplus(-r); -log(1 - sigmoid(f)) = softplus(f)
        out.value += softplus(-real_logits[i]) + softplus(fake_logits[i]);
        out.grads[0][i] = -sigmoid(-real_logits[i]) / n;
        out.grads[1][i] = sigmoid(fake_logits[i]) / n;
    }
    out.value /= n;
    return out;
}

ContrastiveLoss gan_generator_loss(const Tensor& fake_logits) {
    if (fake_logits.empty()) throw DimensionError("gan_generator_loss: empty batch");
    if (!fake_logits.all_finite()) throw NumericError("gan_generator_loss: non-finite logit");
    const auto n = static_cast<double>(fake_logits.size());
    ContrastiveLoss out{0.0, {Tensor(fake_logits.shape())}};
    for (std::size_t i = 0; i < fake_logits.size(); ++i) {
        out.value += softplus(-fake_logits[i]);
        out.grads[0][i] = -sigmoid(-fake_logits[i]) / n;
    }
    out.value /= n;
    return out;
}

// ---------------------------------------------------------------------------

AugmentedView augment_view(std::span<const double> x, const AugmentationConfig& config, Rng& rng) {
    if (!(config.crop_min_fraction > 0.0 && config.crop_min_fraction <= 1.0)) {
        throw ConfigError("crop_min_fraction must lie in (0, 1]");
    }
    if (!(config.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    const std::size_t n = x.size();
    AugmentedView view;
    if (n == 0) return view;
    const double f = rng.uniform(config.crop_min_fraction, 1.0);
    view.crop_length = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(f * static_cast<double>(n))), 1, n);
    view.crop_start = rng.below(n - view.crop_length + 1);
    const double* crop = x.data() + view.crop_start;
    const std::size_t len = view.crop_length;

    view.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (len == 1 || n == 1) {
            view.values[j] = crop[0];
            continue;
        }
        const double pos = static_cast<double>(j) * static_cast<double>(len - 1) / static_cast<double>(n - 1);
        const auto i0 = static_cast<std::size_t>(std::floor(pos));
        if (i0 >= len - 1) {
            view.values[j] = crop[len - 1];
        } else {
            const double frac = pos - static_cast<double>(i0);
            view.values[j] = frac == 0.0 ? crop[i0] : crop[i0] * (1.0 - frac) + crop[i0 + 1] * frac;
        }
    }

    if (config.noise_sigma > 0.0) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : x) var += (v - mean) * (v - mean);
        const double sigma = config.noise_sigma * std::sqrt(var / static_cast<double>(n));
        if (sigma > 0.0)
            for (double& v : view.values) v += sigma * rng.normal();
    }
    return view;
}

std::pair<AugmentedView, AugmentedView> simclr_augment(std::span<const double> x, const AugmentationConfig& config,
                                                        Rng& rng) {
    Rng first(rng.next_u64());
    Rng second(rng.next_u64());
    return {augment_view(x, config, first), augment_view(x, config, second)};
}

MixedSample mix(std::span<const double> a, std::span<const double> b, double lambda) {
    if (a.size() != b.size()) {
        throw DimensionError("mixup: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    MixedSample out{std::vector<double>(a.size()), lambda};
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = lambda * a[i] + (1.0 - lambda) * b[i];
    return out;
}

MixedSample mixup_augment(std::span<const double> a, std::span<const double> b, double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw ConfigError("mixup alpha must be positive");
    return mix(a, b, rng.beta(alpha, alpha));
}

// ---------------------------------------------------------------------------

double PretrainConfig::effective_temperature() const {
    if (temperature > 0.0) return temperature;
    return method == Method::Mixup ? 0.1 : 0.5;
}

namespace {

void zero_all(ModelBundle& bundle) {
    for (auto& [name, s] : bundle.nets) s.zero_grad();
}

void check_finite(double loss, Method method, int epoch, int batch) {
    if (!std::isfinite(loss)) {
        throw DivergenceError(std::string("pretrain ") + to_string(method) + ": non-finite loss", epoch, batch);
    }
}

Tensor rows_to_batch(const std::vector<std::vector<double>>& rows) {
    Tensor t({rows.size(), 1, kFeatureDim});
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy(rows[r].begin(), rows[r].end(), t.data().begin() + static_cast<std::ptrdiff_t>(r * kFeatureDim));
    return t;
}

}  // namespace

PretrainResult pretrain(std::span<const FeatureVector> data, const PretrainConfig& config) {
    if (config.method == Method::Sup) throw ConfigError("pretrain: 'sup' has no pretext task");
    if (data.size() < 2) throw ConfigError("pretrain: need at least two unlabeled samples");
    if (config.epochs < 0) throw ConfigError("pretrain: epochs must be non-negative");

    PretrainResult result{build_for_method(config.method, 0, config.seed), {}};
    ModelBundle& m = result.bundle;
    const AdamConfig adam{config.lr};
    const double tau = config.effective_temperature();
    const Rng root = Rng(config.seed).split("pretrain");

    std::vector<Tensor*> main_params;
    std::vector<Tensor*> gen_params;
    switch (config.method) {
        case Method::Ae: main_params = m.parameters({net::kEncoder, net::kDecoder}); break;
        case Method::SimClr:
        case Method::Mixup: main_params = m.parameters({net::kEncoder, net::kProjector}); break;
        case Method::Gan:
            main_params = m.parameters({net::kDiscEncoder, net::kDiscHead});
            gen_params = m.parameters({net::kGenerator});
            break;
        case Method::Sup: break;
    }
    AdamState main_state = make_adam_state(main_params, adam);
    AdamState gen_state = make_adam_state(gen_params, adam);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng = root.split(static_cast<std::uint64_t>(epoch));
        const auto batches = make_batches(data.size(), config.batch_size, epoch_rng);
        double epoch_sum = 0.0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& idx = batches[bi];
            const std::size_t bsz = idx.size();
            Rng batch_rng = epoch_rng.split(bi + 1);
            const Tensor x = stack_features(data, idx);
            double loss = 0.0;
            zero_all(m);

            switch (config.method) {
                case Method::Ae: {
                    const Tensor recon = forward_chain(m, {net::kEncoder, net::kDecoder}, x, Mode::Train);
                    const LossGrad l = ae_loss(recon, x);
                    loss = l.value;
                    check_finite(loss, config.method, epoch, static_cast<int>(bi));
                    backward_chain(m, {net::kEncoder, net::kDecoder}, l.grad);
                    adam_step(main_state, main_params);
                    break;
                }
                case Method::SimClr: {
                    std::vector<std::vector<double>> rows(2 * bsz);
                    for (std::size_t r = 0; r < bsz; ++r) {
                        auto [a, b] = simclr_augment(data[idx[r]].values, config.augmentation, batch_rng);
                        rows[r] = std::move(a.values);
                        rows[bsz + r] = std::move(b.values);
                    }
                    const Tensor z = forward_chain(m, {net::kEncoder, net::kProjector}, rows_to_batch(rows), Mode::Train);
                    const ContrastiveLoss l = simclr_loss(z.slice_rows(0, bsz), z.slice_rows(bsz, 2 * bsz), tau);
                    loss = l.value;
                    check_finite(loss, config.method, epoch, static_cast<int>(bi));
                    backward_chain(m, {net::kEncoder, net::kProjector}, concat_rows(l.grads));
                    adam_step(main_state, main_params);
                    break;
                }
                case Method::Mixup: {
                    std::vector<std::size_t> partner(bsz);
                    for (std::size_t r = 0; r < bsz; ++r) partner[r] = r;
                    batch_rng.shuffle(std::span(partner));
                    std::vector<std::vector<double>> rows(3 * bsz);
                    std::vector<double> lambdas(bsz);
                    for (std::size_t r = 0; r < bsz; ++r) {
                        const auto& a = data[idx[r]].values;
                        const auto& b = data[idx[partner[r]]].values;
                        MixedSample s = mixup_augment(a, b, config.augmentation.mixup_alpha, batch_rng);
                        lambdas[r] = s.lambda;
                        rows[r] = a;
                        rows[bsz + r] = std::move(s.values);
                        rows[2 * bsz + r] = b;
                    }
                    const Tensor z = forward_chain(m, {net::kEncoder, net::kProjector}, rows_to_batch(rows), Mode::Train);
                    const ContrastiveLoss l = mixup_loss(z.slice_rows(0, bsz), z.slice_rows(bsz, 2 * bsz),
                                                         z.slice_rows(2 * bsz, 3 * bsz), lambdas, tau);
                    loss = l.value;
                    check_finite(loss, config.method, epoch, static_cast<int>(bi));
                    backward_chain(m, {net::kEncoder, net::kProjector}, concat_rows(l.grads));
                    adam_step(main_state, main_params);
                    break;
                }
                case Method::Gan: {
                    Tensor noise({bsz, arch::kLatentDim});
                    for (double& v : noise.data()) v = batch_rng.normal();
                    const Tensor fake = m.at(net::kGenerator).forward(noise, Mode::Train);

                    // Discriminator step: the real and fake passes are backpropagated one
                    // after the other because a second forward overwrites the layer caches.
                    // The per-logit gradients of the loss are independent of the other pass.
                    const Tensor real_logits = forward_chain(m, {net::kDiscEncoder, net::kDiscHead}, x, Mode::Train);
                    Tensor real_grad(real_logits.shape());
                    for (std::size_t r = 0; r < bsz; ++r) real_grad[r] = -sigmoid(-real_logits[r]) / static_cast<double>(bsz);
                    backward_chain(m, {net::kDiscEncoder, net::kDiscHead}, real_grad);
                    Tensor fake_logits = forward_chain(m, {net::kDiscEncoder, net::kDiscHead}, fake, Mode::Train);
                    const ContrastiveLoss dl = gan_discriminator_loss(real_logits, fake_logits);
                    loss = dl.value;
                    check_finite(loss, config.method, epoch, static_cast<int>(bi));
                    backward_chain(m, {net::kDiscEncoder, net::kDiscHead}, dl.grads[1]);
                    adam_step(main_state, main_params);

                    // Generator step through the updated discriminator; only G moves.
                    zero_all(m);
                    fake_logits = forward_chain(m, {net::kDiscEncoder, net::kDiscHead}, fake, Mode::Train);
                    const ContrastiveLoss gl = gan_generator_loss(fake_logits);
                    check_finite(gl.value, config.method, epoch, static_cast<int>(bi));
                    const Tensor grad_fake = backward_chain(m, {net::kDiscEncoder, net::kDiscHead}, gl.grads[0]);
                    m.at(net::kGenerator).backward(grad_fake);
                    adam_step(gen_state, gen_params);
                    break;
                }
                case Method::Sup: break;
            }
            epoch_sum += loss;
        }
        result.epoch_loss.push_back(batches.empty() ? 0.0 : epoch_sum / static_cast<double>(batches.size()));
    }
    for (auto& [name, s] : m.nets) s.clear_cache();
    return result;
}

std::string loss_trace_csv(Method method, std::span<const double> epoch_loss) {
    std::string s = "epoch,method,loss\n";
    char buf[96];
    for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.10g\n", e + 1, to_string(method), epoch_loss[e]);
        s += buf;
    }
    return s;
}

}  // namespace shmssl
