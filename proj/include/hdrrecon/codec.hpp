#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "hdrrecon/image.hpp"

namespace hdrrecon {

/// Malformed, truncated or unsupported file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class HdrFormat { rgbe, pfm };

/// Picks the format from the extension (.hdr / .rgbe / .pic -> RGBE, .pfm -> PFM).
HdrFormat hdr_format_from_path(const std::filesystem::path& path);

// Radiance RGBE pixel codec. A zero pixel encodes to (0,0,0,0); decoding uses
// (mantissa + 0.5) / 256 * 2^(exponent - 128) for a nonzero exponent byte.
std::array<std::uint8_t, 4> encode_rgbe(float r, float g, float b);
std::array<float, 3> decode_rgbe(std::array<std::uint8_t, 4> rgbe);

/// Reads flat (non run-length) Radiance files and little/big endian colour PFM.
/// Run-length encoded RGBE scanlines are rejected with FormatError.
ImageHDR read_hdr(const std::filesystem::path& path, HdrFormat format);
ImageHDR read_hdr(const std::filesystem::path& path);

/// RGBE output uses flat scanlines; PFM output is little endian (scale -1).
void write_hdr(const ImageHDR& image, const std::filesystem::path& path, HdrFormat format);
void write_hdr(const ImageHDR& image, const std::filesystem::path& path);

/// 8-bit RGB PNG. Gray and alpha variants are rejected.
ImageLDR read_ldr(const std::filesystem::path& path);
void write_ldr(const ImageLDR& image, const std::filesystem::path& path);

}  // namespace hdrrecon
