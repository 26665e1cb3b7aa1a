#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hdrrecon/config.hpp"
#include "hdrrecon/image.hpp"
#include "hdrrecon/layers.hpp"
#include "hdrrecon/tensor.hpp"

namespace hdrrecon {

/// Log offset shared by the skip-connection domain transform and the losses.
inline constexpr double kLogEpsilon = 1.0 / 255.0;

/// Encoder input preprocessing: values in [0,1] are scaled to [0,255] and the
/// per-channel RGB means of the VGG16 training data are subtracted.
inline constexpr double kInputScale = 255.0;
inline constexpr std::array<double, 3> kInputMean = {123.68, 116.779, 103.939};

struct NetworkConfig {
  int levels = 3;
  std::vector<int> channels = {32, 64, 128};
  int latent_channels = 128;
  bool skip_connections = true;
  std::string preset = "toy";

  /// L=3, channels 32/64/128, latent 128.
  static NetworkConfig toy();
  /// VGG16-shaped: L=5, channels 64/128/256/512/512, latent 512.
  static NetworkConfig full();
  /// L=2, 8 channels everywhere; small enough for finite-difference checks.
  static NetworkConfig tiny();
  static NetworkConfig preset_named(const std::string& name);

  /// Reads `preset`, then overrides with `levels`, `channels`, `latent_channels`, `skip`.
  static NetworkConfig from_key_values(const KeyValues& kv);
  std::string to_text() const;

  /// Input height and width must be multiples of this.
  int downscale_factor() const { return 1 << levels; }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// Fully convolutional LDR-to-log-HDR autoencoder.
///
/// Encoder level l: conv3x3, ReLU, conv3x3, ReLU (its output feeds skip l), maxpool.
/// Latent: two conv3x3 + ReLU at 1/2^L resolution.
/// Decoder level l (deepest first): bilinear-initialised 4x4 deconv, batchnorm,
/// ReLU, then log-domain fusion with encoder level l when skips are enabled.
/// Output: 1x1 conv to 3 channels with linear activation (log HDR).
template <typename T>
class Network {
 public:
  explicit Network(NetworkConfig config, std::uint64_t init_seed = 0);

  const NetworkConfig& config() const { return config_; }

  /// Caches activations for backward. Input values are display values in [0,1].
  Tensor4<T> forward(const Tensor4<T>& input, nn::Mode mode = nn::Mode::train);
  /// Inference-mode prediction that leaves the network untouched.
  Tensor4<T> infer(const Tensor4<T>& input) const;
  /// Overwrites every parameter gradient with dL/dparam for the last forward.
  void backward(const Tensor4<T>& grad_output);

  /// Trainable parameters in declaration order.
  std::vector<nn::Param<T>*> parameters();
  std::vector<const nn::Param<T>*> parameters() const;
  /// Batchnorm running statistics.
  std::vector<nn::Param<T>*> buffers();
  std::vector<const nn::Param<T>*> buffers() const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// Hash of every ReLU mask and pooling argmax of the last forward. Two
  /// forwards with equal patterns lie on the same smooth piece of the network.
  std::uint64_t activation_pattern() const;

  /// Layer access for tests.
  nn::SkipFuse<T>& fusion(int level) { return decoder_.at(level).fuse; }
  nn::Deconv2x<T>& upsampler(int level) { return decoder_.at(level).up; }

 private:
  struct EncoderLevel {
    nn::Conv2d<T> conv_a, conv_b;
    typename nn::Conv2d<T>::Cache conv_a_cache, conv_b_cache;
    typename nn::Relu<T>::Cache relu_a_cache, relu_b_cache;
    nn::MaxPool2<T> pool;
    typename nn::MaxPool2<T>::Cache pool_cache;
    Tensor4<T> features;  // skip source
  };
  struct DecoderLevel {
    nn::Deconv2x<T> up;
    typename nn::Deconv2x<T>::Cache up_cache;
    nn::BatchNorm<T> norm;
    typename nn::BatchNorm<T>::Cache norm_cache;
    typename nn::Relu<T>::Cache relu_cache;
    nn::SkipFuse<T> fuse;
    typename nn::SkipFuse<T>::Cache fuse_cache;
  };

  Tensor4<T> run(const Tensor4<T>& input, nn::Mode mode, bool record);
  Tensor4<T> preprocess(const Tensor4<T>& input) const;

  NetworkConfig config_;
  std::vector<EncoderLevel> encoder_;
  nn::Conv2d<T> latent_a_, latent_b_;
  typename nn::Conv2d<T>::Cache latent_a_cache_, latent_b_cache_;
  typename nn::Relu<T>::Cache latent_a_relu_, latent_b_relu_;
  std::vector<DecoderLevel> decoder_;  // index = level, processed from levels-1 down to 0
  nn::Conv2d<T> output_;
  typename nn::Conv2d<T>::Cache output_cache_;
  bool has_forward_ = false;
};

/// Stacks LDR images of identical size into a (B, H, W, 3) tensor of values in [0,1].
template <typename T>
Tensor4<T> to_tensor(std::span<const ImageLDR> images);
template <typename T>
Tensor4<T> to_tensor(const ImageLDR& image);

}  // namespace hdrrecon
