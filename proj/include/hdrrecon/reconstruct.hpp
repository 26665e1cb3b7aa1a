#pragma once

#include "hdrrecon/image.hpp"
#include "hdrrecon/loss.hpp"
#include "hdrrecon/network.hpp"
#include "hdrrecon/tensor.hpp"

namespace hdrrecon {

struct ReconstructionConfig {
  double tau = 0.95;
  double gamma = 2.0;

  void validate() const;
};

/// Upper clamp on exp(yhat) before blending.
inline constexpr double kMaxPrediction = 1e12;

/// Per value x^gamma.
ImageHDR linearize(const ImageLDR& image, double gamma);

struct PadRecord {
  int width = 0;   // original
  int height = 0;
  int padded_width = 0;
  int padded_height = 0;
};

/// Smallest multiple of `multiple` that is >= n.
int next_multiple(int n, int multiple);

/// Mirror padding (without repeating the edge pixel) on the right and bottom.
template <typename T>
Raster<T> pad_reflect(const Raster<T>& in, int width, int height);

/// Pads right/bottom to multiples of 2^levels.
ImageLDR pad_to_multiple(const ImageLDR& image, int levels, PadRecord* record);
/// Crops the top-left record.width x record.height window.
template <typename T>
Raster<T> unpad(const Raster<T>& padded, const PadRecord& record);

/// Raw network output yhat (log HDR) for one image of any size, as (H, W, 3) doubles.
Raster<double> predict_log(const Network<float>& net, const ImageLDR& image);

/// (1 - alpha) D^gamma + alpha min(exp(yhat), kMaxPrediction), in double precision.
Raster<double> blend(const ImageLDR& image, const Raster<double>& log_prediction, const ReconstructionConfig& config);

/// Full pipeline: pad, infer, unpad, blend.
ImageHDR predict(const Network<float>& net, const ImageLDR& image, const ReconstructionConfig& config = {});

/// Per value max(0, x - 1).
ImageHDR residual(const ImageHDR& image);

/// Converts a (H, W, 3) double raster to an ImageHDR.
ImageHDR to_image(const Raster<double>& values);

}  // namespace hdrrecon
