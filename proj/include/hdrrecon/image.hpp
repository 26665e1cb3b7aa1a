#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace hdrrecon {

/// Interleaved row-major raster with an arbitrary channel count.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || channels < 1) {
      throw std::invalid_argument("raster dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  T& operator()(int x, int y, int c) { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

/// Linear scene-referred RGB image. Values are finite and nonnegative.
class ImageHDR {
 public:
  ImageHDR() = default;
  ImageHDR(int width, int height) : pixels_(width, height, 3, 0.0f) {}
  /// Throws std::invalid_argument unless the raster has 3 channels of finite, nonnegative values.
  explicit ImageHDR(Raster<float> pixels);

  int width() const { return pixels_.width(); }
  int height() const { return pixels_.height(); }
  float operator()(int x, int y, int c) const { return pixels_(x, y, c); }
  const Raster<float>& raster() const { return pixels_; }
  std::span<const float> data() const { return pixels_.data(); }

  bool operator==(const ImageHDR&) const = default;

 private:
  Raster<float> pixels_;
};

/// Display-referred RGB image on the 8-bit grid {0, 1/255, ..., 1}.
/// Codes are stored directly so every value is on the grid by construction.
class ImageLDR {
 public:
  ImageLDR() = default;
  ImageLDR(int width, int height) : codes_(width, height, 3, 0) {}
  explicit ImageLDR(Raster<std::uint8_t> codes);

  int width() const { return codes_.width(); }
  int height() const { return codes_.height(); }
  std::uint8_t code(int x, int y, int c) const { return codes_(x, y, c); }
  float operator()(int x, int y, int c) const { return codes_(x, y, c) / 255.0f; }
  const Raster<std::uint8_t>& codes() const { return codes_; }

  /// Values as reals in [0,1].
  Raster<float> to_float() const;

  bool operator==(const ImageLDR&) const = default;

 private:
  Raster<std::uint8_t> codes_;
};

/// Per-pixel maximum over channels.
Raster<float> max_channel(const Raster<float>& image);

/// Horizontal mirror.
template <typename T>
Raster<T> flip_horizontal(const Raster<T>& in) {
  Raster<T> out(in.width(), in.height(), in.channels());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x)
      for (int c = 0; c < in.channels(); ++c) out(x, y, c) = in(in.width() - 1 - x, y, c);
  return out;
}

/// Copy of the axis-aligned rectangle [x, x+w) x [y, y+h). Throws if it leaves the raster.
template <typename T>
Raster<T> crop(const Raster<T>& in, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > in.width() || y + h > in.height()) {
    throw std::out_of_range("crop rectangle outside image");
  }
  Raster<T> out(w, h, in.channels());
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      for (int c = 0; c < in.channels(); ++c) out(i, j, c) = in(x + i, y + j, c);
  return out;
}

}  // namespace hdrrecon
