#include "hdrrecon/image.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace hdrrecon {

ImageHDR::ImageHDR(Raster<float> pixels) : pixels_(std::move(pixels)) {
  if (pixels_.channels() != 3) {
    throw std::invalid_argument("HDR image must have 3 channels");
  }
  for (float v : pixels_.data()) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw std::invalid_argument("HDR image values must be finite and nonnegative");
    }
  }
}

ImageLDR::ImageLDR(Raster<std::uint8_t> codes) : codes_(std::move(codes)) {
  if (codes_.channels() != 3) {
    throw std::invalid_argument("LDR image must have 3 channels");
  }
}

Raster<float> ImageLDR::to_float() const {
  Raster<float> out(width(), height(), 3);
  auto src = codes_.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / 255.0f;
  return out;
}

Raster<float> max_channel(const Raster<float>& image) {
  Raster<float> out(image.width(), image.height(), 1);
  const int ch = image.channels();
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    const float* px = src.data() + p * ch;
    dst[p] = *std::max_element(px, px + ch);
  }
  return out;
}

}  // namespace hdrrecon
