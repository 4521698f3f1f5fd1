#include "shmssl/models.hpp"

#include "binary_io.hpp"
#include "shmssl/error.hpp"

#include <algorithm>

namespace shmssl {

const char* to_string(Method method) {
    switch (method) {
        case Method::Sup: return "sup";
        case Method::Ae: return "ae";
        case Method::SimClr: return "simclr";
        case Method::Mixup: return "mixup";
        case Method::Gan: return "gan";
    }
    return "unknown";
}

Method parse_method(const std::string& text) {
    for (Method m : {Method::Sup, Method::Ae, Method::SimClr, Method::Mixup, Method::Gan})
        if (text == to_string(m)) return m;
    throw ConfigError("unknown method '" + text + "' (expected sup, ae, simclr, mixup or gan)");
}

Sequential make_encoder(Rng& rng) {
    Sequential s;
    std::size_t in = 1;
    for (std::size_t i = 0; i < arch::kEncoderChannels.size(); ++i) {
        const std::size_t out = arch::kEncoderChannels[i];
        s.add(std::make_unique<Conv1d>(in, out, arch::kEncoderKernels[i], arch::kEncoderStrides[i], rng));
        s.add(std::make_unique<BatchNorm1d>(out));
        s.add(std::make_unique<ReLU>());
        in = out;
    }
    s.add(std::make_unique<Flatten>());
    return s;
}

Sequential make_decoder(Rng& rng) {
    Sequential s;
    s.add(std::make_unique<Unflatten>());
    std::size_t in = arch::kLatentDim;
    const std::size_t blocks = arch::kDecoderChannels.size();
    for (std::size_t i = 0; i < blocks; ++i) {
        const std::size_t out = arch::kDecoderChannels[i];
        s.add(std::make_unique<Deconv1d>(in, out, arch::kDecoderKernels[i], arch::kDecoderStrides[i],
                                         arch::kDecoderOutputPadding[i], rng));
        s.add(std::make_unique<BatchNorm1d>(out));
        if (i + 1 < blocks) s.add(std::make_unique<ReLU>());
        in = out;
    }
    return s;
}

Sequential make_projector(Rng& rng) {
    Sequential s;
    s.add(std::make_unique<Linear>(arch::kLatentDim, arch::kProjectionDim, rng));
    return s;
}

Sequential make_head(std::size_t num_classes, Rng& rng) {
    Sequential s;
    s.add(std::make_unique<Linear>(arch::kLatentDim, arch::kHeadHidden, rng));
    s.add(std::make_unique<ReLU>());
    s.add(std::make_unique<Linear>(arch::kHeadHidden, num_classes, rng));
    return s;
}

Sequential make_disc_head(Rng& rng) {
    Sequential s;
    s.add(std::make_unique<Linear>(arch::kLatentDim, 1, rng));
    return s;
}

Sequential& ModelBundle::at(const std::string& name) {
    auto it = nets.find(name);
    if (it == nets.end()) throw ConfigError("model bundle has no '" + name + "' network");
    return it->second;
}

std::vector<NamedTensorRef> ModelBundle::named_parameters() {
    std::vector<NamedTensorRef> out;
    for (auto& [name, s] : nets) {
        auto p = s.named_parameters(name);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<NamedTensorRef> ModelBundle::named_tensors() {
    std::vector<NamedTensorRef> out = named_parameters();
    for (auto& [name, s] : nets) {
        auto b = s.named_buffers(name);
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

std::vector<Tensor*> ModelBundle::parameters(std::initializer_list<const char*> names) {
    std::vector<Tensor*> out;
    for (const char* n : names) {
        auto p = at(n).parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

namespace {

void add_net(ModelBundle& b, const char* name, std::size_t num_classes) {
    Rng rng = Rng(b.seed).split(name);
    const std::string n = name;
    if (n == net::kEncoder || n == net::kDiscEncoder) {
        b.nets.emplace(n, make_encoder(rng));
    } else if (n == net::kDecoder || n == net::kGenerator) {
        b.nets.emplace(n, make_decoder(rng));
    } else if (n == net::kProjector) {
        b.nets.emplace(n, make_projector(rng));
    } else if (n == net::kHead) {
        if (num_classes < 2) {
            throw ConfigError("classifier needs at least 2 classes, got " + std::to_string(num_classes));
        }
        b.nets.emplace(n, make_head(num_classes, rng));
    } else if (n == net::kDiscHead) {
        b.nets.emplace(n, make_disc_head(rng));
    } else {
        throw ConfigError("unknown network '" + n + "'");
    }
}

}  // namespace

ModelBundle build(ModelKind kind, std::size_t num_classes, std::uint64_t seed) {
    ModelBundle b;
    b.seed = seed;
    switch (kind) {
        case ModelKind::Encoder: add_net(b, net::kEncoder, 0); break;
        case ModelKind::Decoder: add_net(b, net::kDecoder, 0); break;
        case ModelKind::Projector: add_net(b, net::kProjector, 0); break;
        case ModelKind::Classifier:
            b.num_classes = num_classes;
            add_net(b, net::kHead, num_classes);
            add_net(b, net::kEncoder, 0);
            break;
        case ModelKind::Generator: add_net(b, net::kGenerator, 0); break;
        case ModelKind::Discriminator:
            add_net(b, net::kDiscEncoder, 0);
            add_net(b, net::kDiscHead, 0);
            break;
    }
    return b;
}

ModelBundle build_for_method(Method method, std::size_t num_classes, std::uint64_t seed) {
    ModelBundle b;
    b.method = method;
    b.seed = seed;
    switch (method) {
        case Method::Sup:
            b = build(ModelKind::Classifier, num_classes, seed);
            b.method = Method::Sup;
            break;
        case Method::Ae:
            add_net(b, net::kEncoder, 0);
            add_net(b, net::kDecoder, 0);
            break;
        case Method::SimClr:
        case Method::Mixup:
            add_net(b, net::kEncoder, 0);
            add_net(b, net::kProjector, 0);
            break;
        case Method::Gan:
            add_net(b, net::kGenerator, 0);
            add_net(b, net::kDiscEncoder, 0);
            add_net(b, net::kDiscHead, 0);
            break;
    }
    return b;
}

ModelBundle transfer_encoder(const ModelBundle& pretrained, std::size_t num_classes, std::uint64_t head_seed) {
    const Sequential* source = nullptr;
    if (auto it = pretrained.nets.find(net::kEncoder); it != pretrained.nets.end()) {
        source = &it->second;
    } else if (auto d = pretrained.nets.find(net::kDiscEncoder); d != pretrained.nets.end()) {
        source = &d->second;
    }
    if (!source) throw ConfigError("transfer_encoder: bundle has neither an encoder nor a discriminator encoder");
    ModelBundle c;
    c.method = pretrained.method;
    c.seed = head_seed;
    c.num_classes = num_classes;
    add_net(c, net::kHead, num_classes);
    c.nets.emplace(net::kEncoder, *source);
    return c;
}

Tensor forward_chain(ModelBundle& bundle, std::initializer_list<const char*> names, const Tensor& input, Mode mode) {
    Tensor x = input;
    for (const char* n : names) x = bundle.at(n).forward(x, mode);
    return x;
}

void recalibrate_batchnorm(ModelBundle& bundle, std::initializer_list<const char*> names, const Tensor& inputs,
                           std::size_t batch_size) {
    const std::size_t n = inputs.rank() ? inputs.dim(0) : 0;
    if (n < 2) throw UsageError("recalibrate_batchnorm: needs at least two samples");
    if (batch_size < 2) throw UsageError("recalibrate_batchnorm: batch size must be at least 2");
    std::vector<BatchNorm1d*> norms;
    for (const char* name : names) {
        Sequential& s = bundle.at(name);
        for (std::size_t i = 0; i < s.size(); ++i)
            if (auto* bn = dynamic_cast<BatchNorm1d*>(&s.layer(i))) norms.push_back(bn);
    }
    std::vector<double> saved;
    for (auto* bn : norms) {
        saved.push_back(bn->momentum());
        bn->reset_running_stats();
    }
    std::size_t chunk = 0;
    for (std::size_t begin = 0; begin < n; ++chunk) {
        std::size_t end = std::min(n, begin + batch_size);
        if (n - end == 1) end = n;
        for (auto* bn : norms) bn->set_momentum(1.0 / static_cast<double>(chunk + 1));
        forward_chain(bundle, names, inputs.slice_rows(begin, end), Mode::Train);
        begin = end;
    }
    for (std::size_t i = 0; i < norms.size(); ++i) norms[i]->set_momentum(saved[i]);
    for (const char* name : names) bundle.at(name).clear_cache();
}

Tensor backward_chain(ModelBundle& bundle, std::initializer_list<const char*> names, const Tensor& grad_output) {
    std::vector<const char*> order(names.begin(), names.end());
    Tensor g = grad_output;
    for (auto it = order.rbegin(); it != order.rend(); ++it) g = bundle.at(*it).backward(g);
    return g;
}

Tensor classifier_logits(ModelBundle& bundle, const Tensor& input, Mode mode) {
    return forward_chain(bundle, {net::kEncoder, net::kHead}, input, mode);
}

std::vector<int> predict(ModelBundle& bundle, const Tensor& inputs, std::size_t batch_size) {
    std::vector<int> out;
    if (inputs.rank() == 0) return out;
    const std::size_t n = inputs.dim(0);
    out.reserve(n);
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        const Tensor logits = classifier_logits(bundle, inputs.slice_rows(begin, end), Mode::Eval);
        const std::size_t k = logits.dim(1);
        for (std::size_t r = 0; r < end - begin; ++r) {
            const auto row = logits.data().subspan(r * k, k);
            out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
        }
    }
    return out;
}

std::size_t encoder_parameter_count() {
    std::size_t n = 0;
    std::size_t in = 1;
    for (std::size_t i = 0; i < arch::kEncoderChannels.size(); ++i) {
        const std::size_t out = arch::kEncoderChannels[i];
        n += out * in * arch::kEncoderKernels[i] + out;  // conv weight + bias
        n += 2 * out;                                    // batchnorm gamma + beta
        in = out;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::string_view kCheckpointMagic = "SHMSSLCK";
}

void save_checkpoint(ModelBundle& bundle, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.raw(kCheckpointMagic);
    w.u8(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(bundle.method));
    w.u8(8);
    w.u8(0);
    w.u64(bundle.seed);
    w.u32(static_cast<std::uint32_t>(bundle.num_classes));
    const auto tensors = bundle.named_tensors();
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.raw(name);
        w.u8(static_cast<std::uint8_t>(t->rank()));
        for (std::size_t d : t->shape()) w.u32(static_cast<std::uint32_t>(d));
    }
    for (const auto& [name, t] : tensors)
        for (double v : std::as_const(*t).data()) w.f64(v);
    detail::write_file(path, w.bytes());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = detail::read_file(path);
    detail::ByteReader r(bytes);
    if (r.remaining() < kCheckpointMagic.size() || r.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
        throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic)", 0);
    }
    const std::size_t version_at = r.offset();
    const std::uint8_t version = r.u8();
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
    }
    const std::size_t method_at = r.offset();
    const std::uint8_t method = r.u8();
    if (method > static_cast<std::uint8_t>(Method::Gan)) {
        throw FormatError("unknown method tag " + std::to_string(method), method_at);
    }
    const std::size_t width_at = r.offset();
    const std::uint8_t width = r.u8();
    if (width != 4 && width != 8) throw FormatError("unsupported real width " + std::to_string(width), width_at);
    r.u8();

    struct Entry {
        std::string name;
        Shape shape;
        std::size_t offset;
    };
    const std::uint64_t seed = r.u64();
    const std::uint32_t num_classes = r.u32();
    const std::uint32_t count = r.u32();
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.offset = r.offset();
        e.name = r.raw(r.u16());
        const std::uint8_t rank = r.u8();
        for (std::uint8_t d = 0; d < rank; ++d) e.shape.push_back(r.u32());
        entries.push_back(std::move(e));
    }

    // Rebuild the networks named in the manifest, then overwrite their tensors.
    ModelBundle b;
    b.method = static_cast<Method>(method);
    b.seed = seed;
    b.num_classes = num_classes;
    for (const Entry& e : entries) {
        const std::string net_name = e.name.substr(0, e.name.find('.'));
        if (b.has(net_name)) continue;
        try {
            add_net(b, net_name.c_str(), num_classes);
        } catch (const ConfigError& err) {
            throw FormatError(std::string("manifest entry '") + e.name + "': " + err.what(), e.offset);
        }
    }
    auto tensors = b.named_tensors();
    if (tensors.size() != entries.size()) {
        throw FormatError("manifest lists " + std::to_string(entries.size()) + " tensors, architecture has " +
                              std::to_string(tensors.size()),
                          entries.empty() ? r.offset() : entries.front().offset);
    }
    std::map<std::string, Tensor*> by_name(tensors.begin(), tensors.end());
    for (const Entry& e : entries) {
        auto it = by_name.find(e.name);
        if (it == by_name.end()) throw FormatError("unexpected tensor '" + e.name + "'", e.offset);
        if (it->second->shape() != e.shape) {
            throw FormatError("tensor '" + e.name + "' has shape " + shape_string(e.shape) + ", expected " +
                                  shape_string(it->second->shape()),
                              e.offset);
        }
    }
    for (const Entry& e : entries) {
        Tensor& t = *by_name[e.name];
        for (double& v : t.data()) v = width == 8 ? r.f64() : static_cast<double>(r.f32());
    }
    if (r.remaining() != 0) {
        throw FormatError(std::to_string(r.remaining()) + " trailing bytes after payload", r.offset());
    }
    return b;
}

}  // namespace shmssl
