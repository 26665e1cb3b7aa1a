#pragma once

#include <cstdint>

#include "hdrrecon/image.hpp"

namespace hdrrecon {

/// Procedural HDR scene: textured, tinted diffuse surfaces in roughly
/// [0.02, 1], a brighter sky band, and a handful of coloured emitters and
/// specular spots peaking well above 1. Deterministic in `seed`.
ImageHDR synthetic_scene(int width, int height, std::uint64_t seed);

}  // namespace hdrrecon
