#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdrrecon {

/// Dense (batch, height, width, channels) tensor, row-major in that order.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int batch, int height, int width, int channels, T fill = T{})
      : n_(batch), h_(height), w_(width), c_(channels) {
    if (batch < 1 || height < 1 || width < 1 || channels < 1) {
      throw std::invalid_argument("tensor dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(batch) * height * width * channels, fill);
  }

  int batch() const { return n_; }
  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  /// batch * height * width, i.e. the row count of the (pixels x channels) view.
  std::size_t pixels() const { return static_cast<std::size_t>(n_) * h_ * w_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int b, int y, int x, int c) const {
    return ((static_cast<std::size_t>(b) * h_ + y) * w_ + x) * c_ + c;
  }
  T& operator()(int b, int y, int x, int c) { return data_[index(b, y, x, c)]; }
  const T& operator()(int b, int y, int x, int c) const { return data_[index(b, y, x, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }
  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(const Tensor4& o) const { return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }
  std::string shape_string() const {
    return "(" + std::to_string(n_) + "," + std::to_string(h_) + "," + std::to_string(w_) + "," +
           std::to_string(c_) + ")";
  }

  template <typename U>
  Tensor4<U> cast() const {
    Tensor4<U> out(n_, h_, w_, c_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor4&) const = default;

 private:
  int n_ = 0;
  int h_ = 0;
  int w_ = 0;
  int c_ = 0;
  std::vector<T> data_;
};

}  // namespace hdrrecon
