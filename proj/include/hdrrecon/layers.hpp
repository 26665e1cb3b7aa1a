#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hdrrecon/rng.hpp"
#include "hdrrecon/tensor.hpp"

namespace hdrrecon::nn {

/// Named parameter array with its gradient.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> s);
  std::size_t size() const { return value.size(); }
};

enum class Mode { train, inference };

/// Stride-1 convolution with zero "same" padding; kernel 1 or 3.
/// Weight layout: (ky, kx, in_channel) rows x out_channel columns.
template <typename T>
class Conv2d {
 public:
  struct Cache {
    std::vector<T> columns;  // im2col rows, or the input itself for 1x1
    int batch = 0, height = 0, width = 0;
  };

  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel);

  Tensor4<T> forward(const Tensor4<T>& x, Cache* cache) const;
  /// Accumulates parameter gradients; returns dL/dx unless need_input_grad is false.
  Tensor4<T> backward(const Tensor4<T>& dy, const Cache& cache, bool need_input_grad = true);

  /// Glorot uniform weights, zero bias.
  void init_xavier(Rng& rng);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }

  Param<T> weight;
  Param<T> bias;

 private:
  int in_ = 0, out_ = 0, k_ = 0;
};

/// 2x2 max pooling with stride 2.
template <typename T>
class MaxPool2 {
 public:
  struct Cache {
    std::vector<std::uint32_t> argmax;
    int batch = 0, height = 0, width = 0, channels = 0;
  };

  Tensor4<T> forward(const Tensor4<T>& x, Cache* cache) const;
  Tensor4<T> backward(const Tensor4<T>& dy, const Cache& cache) const;
};

/// 4x4 stride-2 transposed convolution cropped by one pixel per side, so the
/// output is exactly twice the input size.
/// Weight layout: in_channel rows x (ky, kx, out_channel) columns.
template <typename T>
class Deconv2x {
 public:
  struct Cache {
    Tensor4<T> input;
  };

  Deconv2x() = default;
  Deconv2x(const std::string& name, int in_channels, int out_channels);

  Tensor4<T> forward(const Tensor4<T>& x, Cache* cache) const;
  Tensor4<T> backward(const Tensor4<T>& dy, const Cache& cache);

  /// Separable bilinear kernel (1/4, 3/4, 3/4, 1/4) on the channel diagonal,
  /// zero cross-channel weights and bias.
  void init_bilinear();

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Param<T> weight;
  Param<T> bias;

 private:
  int in_ = 0, out_ = 0;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.99;

/// Per-channel batch normalization over (batch, height, width).
/// Running statistics store the biased batch variance.
template <typename T>
class BatchNorm {
 public:
  struct Cache {
    std::vector<T> normalized;
    std::vector<T> inv_std;
    Mode mode = Mode::train;
    int batch = 0, height = 0, width = 0;
  };

  BatchNorm() = default;
  BatchNorm(const std::string& name, int channels);

  /// Train mode normalizes with batch statistics and updates the running ones.
  Tensor4<T> forward(const Tensor4<T>& x, Mode mode, Cache* cache);
  /// Inference mode only; does not touch any state.
  Tensor4<T> infer(const Tensor4<T>& x) const;
  Tensor4<T> backward(const Tensor4<T>& dy, const Cache& cache);

  Param<T> gamma;
  Param<T> beta;
  Param<T> running_mean;
  Param<T> running_var;

 private:
  Tensor4<T> normalize_with(const Tensor4<T>& x, const std::vector<T>& mean, const std::vector<T>& inv_std,
                            Cache* cache) const;
  int channels_ = 0;
};

/// In-place rectifier; the cache keeps the active mask.
template <typename T>
struct Relu {
  struct Cache {
    std::vector<std::uint8_t> active;
  };
  static void forward(Tensor4<T>& x, Cache* cache);
  static void backward(Tensor4<T>& dy, const Cache& cache);
};

/// Log-domain skip fusion: ReLU([h_D, log(h_E^2 + eps)] W + b) with W of
/// shape 2K x K, i.e. a 1x1 convolution over the concatenated features.
template <typename T>
class SkipFuse {
 public:
  struct Cache {
    std::vector<T> concat;  // pixels x 2K
    std::vector<std::uint8_t> active;
    Tensor4<T> encoder;
  };

  SkipFuse() = default;
  SkipFuse(const std::string& name, int channels, double epsilon);

  Tensor4<T> forward(const Tensor4<T>& decoder, const Tensor4<T>& encoder, Cache* cache) const;
  /// Returns (dL/d decoder, dL/d encoder).
  std::pair<Tensor4<T>, Tensor4<T>> backward(const Tensor4<T>& dy, const Cache& cache);

  /// W0 = [I; I], b0 = 0, so the fusion starts out as an elementwise sum.
  void init_identity_sum();

  int channels() const { return k_; }
  double epsilon() const { return eps_; }

  Param<T> weight;
  Param<T> bias;

 private:
  int k_ = 0;
  double eps_ = 0.0;
};

/// Bilinear upsampling taps for a 4x4 stride-2 kernel.
inline constexpr double kBilinearTaps[4] = {0.25, 0.75, 0.75, 0.25};

}  // namespace hdrrecon::nn
