#include "hdrrecon/color.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdrrecon {

Raster<float> luminance(const Raster<float>& rgb) {
  if (rgb.channels() != 3) throw std::invalid_argument("luminance needs 3 channels");
  Raster<float> out(rgb.width(), rgb.height(), 1);
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    dst[p] = static_cast<float>(luminance(src[3 * p], src[3 * p + 1], src[3 * p + 2]));
  }
  return out;
}

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  if (mx <= 0.0 || delta <= 0.0) return out;
  out.s = delta / mx;
  double h;
  if (mx == r) {
    h = (g - b) / delta;
  } else if (mx == g) {
    h = 2.0 + (b - r) / delta;
  } else {
    h = 4.0 + (r - g) / delta;
  }
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

std::array<double, 3> hsv_to_rgb(const Hsv& hsv) {
  const double v = hsv.v;
  if (hsv.s <= 0.0) return {v, v, v};
  double h = std::fmod(hsv.h, 360.0);
  if (h < 0.0) h += 360.0;
  h /= 60.0;
  const int sector = std::min(5, static_cast<int>(h));
  const double f = h - sector;
  const double p = v * (1.0 - hsv.s);
  const double q = v * (1.0 - hsv.s * f);
  const double t = v * (1.0 - hsv.s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Raster<float> shift_hue_saturation(const Raster<float>& rgb, double hue_shift, double sat_shift) {
  if (rgb.channels() != 3) throw std::invalid_argument("HSV shift needs 3 channels");
  Raster<float> out(rgb.width(), rgb.height(), 3);
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    Hsv hsv = rgb_to_hsv(src[3 * p], src[3 * p + 1], src[3 * p + 2]);
    hsv.h = std::fmod(hsv.h + hue_shift, 360.0);
    if (hsv.h < 0.0) hsv.h += 360.0;
    hsv.s = std::clamp(hsv.s + sat_shift, 0.0, 1.0);
    const auto c = hsv_to_rgb(hsv);
    for (int k = 0; k < 3; ++k) dst[3 * p + k] = static_cast<float>(std::max(0.0, c[k]));
  }
  return out;
}

}  // namespace hdrrecon
