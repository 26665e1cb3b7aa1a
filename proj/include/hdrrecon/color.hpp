#pragma once

#include <array>

#include "hdrrecon/image.hpp"

namespace hdrrecon {

/// Luminance weights for linear RGB; they sum to one.
inline constexpr std::array<double, 3> kLuminanceWeights = {0.213, 0.715, 0.072};

inline double luminance(double r, double g, double b) {
  return kLuminanceWeights[0] * r + kLuminanceWeights[1] * g + kLuminanceWeights[2] * b;
}

/// Single-channel luminance of a 3-channel raster.
Raster<float> luminance(const Raster<float>& rgb);

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // max channel
};

// Hexcone model. Achromatic pixels get hue 0. The conversion is also well
// defined for nonnegative values above 1, where v is simply the max channel.
Hsv rgb_to_hsv(double r, double g, double b);
std::array<double, 3> hsv_to_rgb(const Hsv& hsv);

/// Adds hue_shift degrees (wrapping) and sat_shift (clamped to [0,1]) to every pixel.
Raster<float> shift_hue_saturation(const Raster<float>& rgb, double hue_shift, double sat_shift);

}  // namespace hdrrecon
