#pragma once

#include "hdrrecon/image.hpp"

namespace hdrrecon {

/// Separable bilinear resize. Output sample i reads source position
/// (i + 0.5) * in / out - 0.5, clamped to the image, so a same-size resize is
/// the identity and constants are preserved.
Raster<float> resample_bilinear(const Raster<float>& image, int new_width, int new_height);

}  // namespace hdrrecon
