#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hdrrecon/color.hpp"
#include "hdrrecon/config.hpp"
#include "hdrrecon/image.hpp"
#include "hdrrecon/network.hpp"
#include "hdrrecon/tensor.hpp"

namespace hdrrecon {

enum class LossMode { direct, ir };

LossMode loss_mode_named(const std::string& name);
std::string to_string(LossMode mode);

struct LossConfig {
  double lambda = 0.5;
  double tau = 0.95;
  double epsilon = kLogEpsilon;
  double sigma = 2.0;  // pixels; 0 disables the blur
  LossMode mode = LossMode::direct;

  void validate() const;
  /// Reads `loss`, `lambda`, `tau`, `epsilon`, `gaussian_sigma`; missing keys keep defaults.
  static LossConfig from_key_values(const KeyValues& kv);
  std::string to_text() const;
};

/// Per-pixel blend weight between the input and the prediction.
struct BlendMask {
  int width = 0;
  int height = 0;
  std::vector<double> alpha;

  double operator()(int x, int y) const { return alpha[static_cast<std::size_t>(y) * width + x]; }
};

/// alpha = max(0, max_c D - tau) / (1 - tau), with tau in (0,1).
double blend_weight(double max_value, double tau);
BlendMask blend_mask(const Raster<float>& display, double tau);
BlendMask blend_mask(const ImageLDR& display, double tau);

/// (B,H,W,3) tensor of log(H + eps).
Tensor4<double> log_target(std::span<const ImageHDR> images, double epsilon);
Tensor4<double> log_target(const ImageHDR& image, double epsilon);
/// (B,H,W,1) tensor of blend weights.
Tensor4<double> mask_tensor(std::span<const BlendMask> masks);
Tensor4<double> mask_tensor(const BlendMask& mask);

struct LossValue {
  double value = 0.0;
  Tensor4<double> gradient;  // dL/d(prediction), same shape as the prediction
};

/// L = 1/(3N) sum (alpha (yhat - y))^2 over all pixels of the batch.
LossValue direct_loss(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha);

/// Normalized Gaussian taps for offsets -r..r, r = ceil(3 sigma). sigma = 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);
/// Separable blur with replicated borders.
Raster<double> gaussian_blur(const Raster<double>& image, double sigma);
/// Exact adjoint of gaussian_blur, including the border clamping.
Raster<double> gaussian_blur_adjoint(const Raster<double>& image, double sigma);

struct IrDecomposition {
  Tensor4<double> log_illuminance;  // (B,H,W,1)
  Tensor4<double> log_reflectance;  // (B,H,W,3)
};

IrDecomposition decompose_ir(const Tensor4<double>& yhat, double sigma,
                             const std::array<double, 3>& weights = kLuminanceWeights);

struct IrLossValue : LossValue {
  double illuminance = 0.0;  // the lambda = 1 loss
  double reflectance = 0.0;  // the lambda = 0 loss
};

IrLossValue ir_loss(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha,
                    double lambda, double sigma);

/// Dispatches on config.mode.
LossValue hdr_loss(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha,
                   const LossConfig& config);

}  // namespace hdrrecon
