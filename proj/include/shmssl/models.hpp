#pragma once

#include "shmssl/layers.hpp"
#include "shmssl/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace shmssl {

enum class Method : std::uint8_t { Sup = 0, Ae = 1, SimClr = 2, Mixup = 3, Gan = 4 };

const char* to_string(Method method);
Method parse_method(const std::string& text);

/// Architecture constants of the networks.
namespace arch {
inline constexpr std::size_t kInputLength = 512;
inline constexpr std::size_t kLatentDim = 256;
inline constexpr std::size_t kProjectionDim = 128;
inline constexpr std::size_t kHeadHidden = 256;
inline constexpr std::array<std::size_t, 5> kEncoderChannels{16, 32, 64, 128, 256};
inline constexpr std::array<std::size_t, 5> kEncoderKernels{5, 3, 3, 3, 3};
inline constexpr std::array<std::size_t, 5> kEncoderStrides{5, 3, 3, 3, 3};
inline constexpr std::array<std::size_t, 5> kDecoderChannels{128, 64, 32, 16, 1};
inline constexpr std::array<std::size_t, 5> kDecoderKernels{3, 3, 3, 3, 5};
inline constexpr std::array<std::size_t, 5> kDecoderStrides{3, 3, 3, 3, 5};
// Restores the encoder's length sequence 1 -> 3 -> 11 -> 34 -> 102 -> 512.
inline constexpr std::array<std::size_t, 5> kDecoderOutputPadding{0, 2, 1, 0, 2};
}  // namespace arch

// Network names used inside a bundle and as checkpoint name prefixes.
namespace net {
inline constexpr const char* kEncoder = "encoder";
inline constexpr const char* kDecoder = "decoder";
inline constexpr const char* kProjector = "projector";
inline constexpr const char* kHead = "head";
inline constexpr const char* kGenerator = "generator";
inline constexpr const char* kDiscEncoder = "disc_encoder";
inline constexpr const char* kDiscHead = "disc_head";
}  // namespace net

/// (B,1,512) -> (B,256): five conv1d + batchnorm + ReLU blocks, then flatten.
Sequential make_encoder(Rng& rng);
/// (B,256) -> (B,1,512): unflatten, five deconv1d + batchnorm blocks, ReLU on all but the last.
Sequential make_decoder(Rng& rng);
Sequential make_projector(Rng& rng);
/// 256 -> 256 -> ReLU -> K.
Sequential make_head(std::size_t num_classes, Rng& rng);
/// Linear 256 -> 1 producing the discriminator logit.
Sequential make_disc_head(Rng& rng);

enum class ModelKind { Encoder, Decoder, Projector, Classifier, Generator, Discriminator };

/// Named collection of networks plus the metadata a checkpoint records.
struct ModelBundle {
    Method method = Method::Sup;
    std::uint64_t seed = 0;
    std::size_t num_classes = 0;
    std::map<std::string, Sequential> nets;

    bool has(const std::string& name) const { return nets.count(name) != 0; }
    Sequential& at(const std::string& name);

    /// Every trainable tensor, ordered by network name then layer.
    std::vector<NamedTensorRef> named_parameters();
    /// Parameters followed by batchnorm running statistics.
    std::vector<NamedTensorRef> named_tensors();
    std::vector<Tensor*> parameters(std::initializer_list<const char*> names);
};

ModelBundle build(ModelKind kind, std::size_t num_classes, std::uint64_t seed);

/// The networks a pretext method trains: AE -> encoder+decoder,
/// SimCLR/Mixup -> encoder+projector, GAN -> generator+discriminator,
/// SUP -> classifier.
ModelBundle build_for_method(Method method, std::size_t num_classes, std::uint64_t seed);

/// Classifier whose encoder is copied (with running statistics) from the
/// pretrained bundle's encoder, or from the discriminator's encoder for GAN
/// bundles. The head is freshly initialized from `head_seed`.
ModelBundle transfer_encoder(const ModelBundle& pretrained, std::size_t num_classes, std::uint64_t head_seed);

/// Runs the named networks in order.
Tensor forward_chain(ModelBundle& bundle, std::initializer_list<const char*> names, const Tensor& input, Mode mode);
/// Backpropagates through the named networks in reverse order.
Tensor backward_chain(ModelBundle& bundle, std::initializer_list<const char*> names, const Tensor& grad_output);

/// Re-estimates every batchnorm running mean and variance of the named
/// networks as the average over consecutive minibatches of `inputs` under the
/// current weights. Parameters are untouched.
void recalibrate_batchnorm(ModelBundle& bundle, std::initializer_list<const char*> names, const Tensor& inputs,
                           std::size_t batch_size);

/// Logits (B x K) of the encoder + head classifier.
Tensor classifier_logits(ModelBundle& bundle, const Tensor& input, Mode mode);

/// Argmax class per row of an evaluation-mode forward pass, in minibatches.
std::vector<int> predict(ModelBundle& bundle, const Tensor& inputs, std::size_t batch_size = 256);

/// Total number of encoder parameters implied by the layer table.
std::size_t encoder_parameter_count();

// Checkpoint (.ckpt) layout, little-endian:
//   "SHMSSLCK" | u8 version | u8 method | u8 real width (4 or 8) | u8 0 |
//   u64 seed | u32 num_classes | u32 entries |
//   entries x (u16 name length, name, u8 rank, rank x u32 dim) |
//   payload: all entries' values in manifest order.
inline constexpr std::uint8_t kCheckpointVersion = 1;

void save_checkpoint(ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace shmssl
