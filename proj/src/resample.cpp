#include "hdrrecon/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hdrrecon {

namespace {

struct Tap {
  int i0;
  int i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double pos = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(pos));
    const int i1 = std::min(i0 + 1, in - 1);
    t[i] = {i0, i1, pos - i0};
  }
  return t;
}

}  // namespace

Raster<float> resample_bilinear(const Raster<float>& image, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw std::invalid_argument("resample target must be positive");
  const int ch = image.channels();
  const auto tx = taps(image.width(), new_width);
  const auto ty = taps(image.height(), new_height);

  // Horizontal pass into a double buffer, then vertical.
  std::vector<double> tmp(static_cast<std::size_t>(new_width) * image.height() * ch);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < new_width; ++x)
      for (int c = 0; c < ch; ++c) {
        const Tap& t = tx[x];
        const double a = image(t.i0, y, c);
        const double b = image(t.i1, y, c);
        tmp[(static_cast<std::size_t>(y) * new_width + x) * ch + c] = a + t.w1 * (b - a);
      }

  Raster<float> out(new_width, new_height, ch);
  for (int y = 0; y < new_height; ++y) {
    const Tap& t = ty[y];
    for (int x = 0; x < new_width; ++x)
      for (int c = 0; c < ch; ++c) {
        const double a = tmp[(static_cast<std::size_t>(t.i0) * new_width + x) * ch + c];
        const double b = tmp[(static_cast<std::size_t>(t.i1) * new_width + x) * ch + c];
        out(x, y, c) = static_cast<float>(a + t.w1 * (b - a));
      }
  }
  return out;
}

}  // namespace hdrrecon
