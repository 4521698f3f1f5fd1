#include "checks.hpp"

#include "shmssl/adam.hpp"
#include "shmssl/error.hpp"
#include "shmssl/losses.hpp"
#include "shmssl/models.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace shmssl;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "shmssl_test_models";
    fs::create_directories(dir);
    return dir / name;
}

bool same_tensors(ModelBundle& a, ModelBundle& b) {
    auto ta = a.named_tensors();
    auto tb = b.named_tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].first != tb[i].first || !(*ta[i].second == *tb[i].second)) return false;
    }
    return true;
}

}  // namespace

TEST(Models, EncoderShape) {
    ModelBundle m = build(ModelKind::Encoder, 0, 1);
    EXPECT_EQ(forward_chain(m, {net::kEncoder}, Tensor({1, 1, 512}), Mode::Eval).shape(), (Shape{1, 256}));
    EXPECT_EQ(forward_chain(m, {net::kEncoder}, Tensor({3, 1, 512}), Mode::Eval).shape(), (Shape{3, 256}));
}

TEST(Models, DecoderShape) {
    ModelBundle m = build(ModelKind::Decoder, 0, 1);
    EXPECT_EQ(forward_chain(m, {net::kDecoder}, Tensor({1, 256, 1}), Mode::Eval).shape(), (Shape{1, 1, 512}));
    EXPECT_EQ(forward_chain(m, {net::kDecoder}, Tensor({2, 256}), Mode::Eval).shape(), (Shape{2, 1, 512}));
}

TEST(Models, ClassifierLogits) {
    for (std::size_t k : {5u, 6u}) {
        ModelBundle m = build(ModelKind::Classifier, k, 2);
        EXPECT_EQ(classifier_logits(m, Tensor({2, 1, 512}), Mode::Eval).shape(), (Shape{2, k}));
    }
    EXPECT_THROW(build(ModelKind::Classifier, 1, 2), ConfigError);
}

TEST(Models, ProjectorAndGenerator) {
    ModelBundle p = build(ModelKind::Projector, 0, 1);
    EXPECT_EQ(forward_chain(p, {net::kProjector}, Tensor({2, 256}), Mode::Eval).shape(), (Shape{2, 128}));
    ModelBundle g = build_for_method(Method::Gan, 0, 1);
    const Tensor fake = forward_chain(g, {net::kGenerator}, Tensor({2, 256}), Mode::Eval);
    EXPECT_EQ(fake.shape(), (Shape{2, 1, 512}));
    EXPECT_EQ(forward_chain(g, {net::kDiscEncoder, net::kDiscHead}, fake, Mode::Eval).shape(), (Shape{2, 1}));
}

TEST(Models, EncoderParameterCount) {
    EXPECT_EQ(encoder_parameter_count(), 132128u);
    ModelBundle m = build(ModelKind::Encoder, 0, 1);
    EXPECT_EQ(m.at(net::kEncoder).parameter_count(), 132128u);
}

TEST(Models, SeedDeterminesParameters) {
    ModelBundle a = build(ModelKind::Classifier, 6, 9);
    ModelBundle b = build(ModelKind::Classifier, 6, 9);
    ModelBundle c = build(ModelKind::Classifier, 6, 10);
    EXPECT_TRUE(same_tensors(a, b));
    EXPECT_FALSE(same_tensors(a, c));
}

namespace {

// Loss of the encoder plus the sign pattern of every ReLU input, so a finite
// difference that crosses a kink can be recognized.
double encoder_loss(Sequential& enc, const Tensor& x, const Tensor& target, std::vector<bool>* signs) {
    Tensor h = x;
    for (std::size_t i = 0; i < enc.size(); ++i) {
        if (signs && enc.layer(i).kind() == LayerKind::ReLU) {
            for (double v : h.data()) signs->push_back(v > 0.0);
        }
        h = enc.layer(i).forward(h, Mode::Train);
    }
    return mse_loss(h, target).value;
}

}  // namespace

TEST(Models, EncoderGradientBatchTwo) {
    ModelBundle m = build(ModelKind::Encoder, 0, 4);
    Rng rng(5);
    Tensor x = checks::normal_tensor({2, 1, 512}, rng);
    const Tensor target = checks::normal_tensor({2, 256}, rng);
    Sequential& enc = m.at(net::kEncoder);
    auto params = enc.named_parameters("encoder");
    // Conv biases are skipped: the batchnorm that follows cancels them, so
    // their true gradient is zero and any difference quotient is noise.
    std::vector<std::pair<std::string, Tensor*>> wrt{{"input", &x}, params[0], params[2], params[3],
                                                     params[params.size() - 2], params.back()};

    enc.zero_grad();
    const LossGrad lg = mse_loss(enc.forward(x, Mode::Train), target);
    const Tensor gx = enc.backward(lg.grad);
    x.ensure_grad();
    std::copy(gx.data().begin(), gx.data().end(), x.grad().begin());
    std::vector<bool> base_signs;
    encoder_loss(enc, x, target, &base_signs);

    // Batchnorm over two samples makes this loss strongly curved, so the plain
    // central difference at h = 1e-4 carries an O(h^2) bias of ~0.2%.
    // Richardson extrapolation of D(h) and D(h/2) removes that term.
    const double h = 1e-4;
    double worst = 0.0;
    std::size_t checked = 0, skipped = 0;
    std::string where;
    for (auto& [name, t] : wrt) {
        const std::vector<double> analytic(std::as_const(*t).grad().begin(), std::as_const(*t).grad().end());
        for (std::size_t i = 0; i < t->size(); ++i) {
            const double saved = (*t)[i];
            bool crossed = false;
            auto diff = [&](double step) {
                std::vector<bool> sp, sm;
                (*t)[i] = saved + step;
                const double plus = encoder_loss(enc, x, target, &sp);
                (*t)[i] = saved - step;
                const double minus = encoder_loss(enc, x, target, &sm);
                (*t)[i] = saved;
                crossed = crossed || sp != base_signs || sm != base_signs;
                return (plus - minus) / (2 * step);
            };
            const double numeric = (4.0 * diff(h / 2) - diff(h)) / 3.0;
            if (crossed) {
                ++skipped;
                continue;
            }
            const double err =
                std::abs(analytic[i] - numeric) / std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
            if (err > worst) {
                worst = err;
                where = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[i]) + " numeric " +
                        std::to_string(numeric);
            }
            ++checked;
        }
    }
    EXPECT_LT(worst, 1e-3) << where;
    EXPECT_LT(skipped * 20, checked) << "too many kink crossings: " << skipped;
}

TEST(Checkpoint, RoundTrip) {
    ModelBundle m = build_for_method(Method::Ae, 0, 17);
    forward_chain(m, {net::kEncoder}, Tensor({2, 1, 512}, 0.3), Mode::Train);  // move running stats
    const fs::path p = temp_path("ae.ckpt");
    save_checkpoint(m, p);
    ModelBundle back = load_checkpoint(p);
    EXPECT_EQ(back.method, Method::Ae);
    EXPECT_EQ(back.seed, 17u);
    EXPECT_TRUE(same_tensors(m, back));
}

TEST(Checkpoint, WrongMagic) {
    const fs::path p = temp_path("magic.ckpt");
    ModelBundle m = build(ModelKind::Projector, 0, 1);
    save_checkpoint(m, p);
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    EXPECT_THROW(load_checkpoint(p), FormatError);
}

TEST(Checkpoint, TruncatedPayloadReportsOffset) {
    const fs::path p = temp_path("trunc.ckpt");
    ModelBundle m = build(ModelKind::Projector, 0, 1);
    save_checkpoint(m, p);
    fs::resize_file(p, fs::file_size(p) - 9);
    try {
        load_checkpoint(p);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_GT(e.offset(), 0u);
    }
}

TEST(Checkpoint, VersionMismatch) {
    const fs::path p = temp_path("version.ckpt");
    ModelBundle m = build(ModelKind::Projector, 0, 1);
    save_checkpoint(m, p);
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8);
        f.put(static_cast<char>(kCheckpointVersion + 1));
    }
    EXPECT_THROW(load_checkpoint(p), FormatError);
}

TEST(Checkpoint, MissingFileIsIoError) {
    EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), IoError);
}

TEST(Checkpoint, OneStepChangesParameters) {
    const fs::path p = temp_path("step.ckpt");
    ModelBundle m = build(ModelKind::Classifier, 6, 3);
    save_checkpoint(m, p);
    ModelBundle loaded = load_checkpoint(p);
    auto params = loaded.parameters({net::kEncoder, net::kHead});
    for (Tensor* t : params) t->ensure_grad();
    AdamState state = make_adam_state(params);
    Rng rng(8);
    const Tensor x = checks::normal_tensor({4, 1, 512}, rng);
    const std::vector<int> labels{0, 1, 2, 3};
    const LossGrad lg = softmax_cross_entropy(classifier_logits(loaded, x, Mode::Train), labels);
    backward_chain(loaded, {net::kEncoder, net::kHead}, lg.grad);
    adam_step(state, params);
    ModelBundle original = load_checkpoint(p);
    EXPECT_FALSE(same_tensors(original, loaded));
}

TEST(Transfer, FromAutoencoder) {
    ModelBundle ae = build_for_method(Method::Ae, 0, 21);
    ModelBundle clf = transfer_encoder(ae, 6, 99);
    auto a = ae.at(net::kEncoder).named_parameters("e");
    auto c = clf.at(net::kEncoder).named_parameters("e");
    ASSERT_EQ(a.size(), c.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].second, *c[i].second);
    ModelBundle fresh = build(ModelKind::Classifier, 6, 21);
    EXPECT_FALSE(*fresh.at(net::kHead).parameters()[0] == *clf.at(net::kHead).parameters()[0]);

    Rng rng(2);
    const Tensor x = checks::normal_tensor({3, 1, 512}, rng);
    EXPECT_EQ(forward_chain(ae, {net::kEncoder}, x, Mode::Eval), forward_chain(clf, {net::kEncoder}, x, Mode::Eval));
}

TEST(Transfer, FromGanUsesDiscriminatorEncoder) {
    ModelBundle gan = build_for_method(Method::Gan, 0, 22);
    ModelBundle clf = transfer_encoder(gan, 5, 1);
    auto d = gan.at(net::kDiscEncoder).named_parameters("e");
    auto c = clf.at(net::kEncoder).named_parameters("e");
    ASSERT_EQ(d.size(), c.size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(*d[i].second, *c[i].second);
}

TEST(Transfer, NoEncoderIsConfigError) {
    ModelBundle p = build(ModelKind::Projector, 0, 1);
    EXPECT_THROW(transfer_encoder(p, 6, 1), ConfigError);
}

TEST(Recalibration, MatchesPopulationStatistics) {
    ModelBundle m = build(ModelKind::Encoder, 0, 6);
    Rng rng(3);
    const Tensor x = checks::normal_tensor({10, 1, 512}, rng);
    recalibrate_batchnorm(m, {net::kEncoder}, x, 5);
    auto& bn = dynamic_cast<BatchNorm1d&>(m.at(net::kEncoder).layer(1));
    // First batchnorm sees the conv output; its running mean is the average of the two chunk means.
    Sequential conv_only;
    conv_only.add(m.at(net::kEncoder).layer(0).clone());
    const Tensor y = conv_only.forward(x, Mode::Eval);
    const std::size_t c = y.dim(1), l = y.dim(2);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t b = 0; b < 10; ++b)
            for (std::size_t i = 0; i < l; ++i) s += y[(b * c + ch) * l + i];
        EXPECT_NEAR(bn.running_mean()[ch], s / static_cast<double>(10 * l), 1e-12);
    }
    EXPECT_NEAR(bn.momentum(), 0.1, 0.0);
}
