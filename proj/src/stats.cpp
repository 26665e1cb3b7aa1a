#include "hdrrecon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hdrrecon/color.hpp"

namespace hdrrecon {

Histogram histogram(std::span<const float> values, int bin_count, double lo, double hi) {
  if (bin_count < 1) throw std::invalid_argument("histogram needs at least one bin");
  if (!(hi > lo)) throw std::invalid_argument("histogram range is empty");
  Histogram h;
  h.bin_edges.resize(bin_count + 1);
  const double width = (hi - lo) / bin_count;
  for (int i = 0; i <= bin_count; ++i) h.bin_edges[i] = lo + width * i;
  h.bin_edges.back() = hi;
  h.counts.assign(bin_count, 0);
  for (float v : values) {
    long bin = static_cast<long>(std::floor((v - lo) / width));
    bin = std::clamp(bin, 0L, static_cast<long>(bin_count - 1));
    ++h.counts[bin];
  }
  h.total = values.size();
  return h;
}

std::vector<float> channel_samples(const Raster<float>& image, ChannelMode mode) {
  switch (mode) {
    case ChannelMode::per_channel: {
      auto d = image.data();
      return {d.begin(), d.end()};
    }
    case ChannelMode::luminance: {
      auto l = luminance(image);
      return {l.data().begin(), l.data().end()};
    }
    case ChannelMode::max_channel: {
      auto m = max_channel(image);
      return {m.data().begin(), m.data().end()};
    }
  }
  throw std::invalid_argument("unknown channel mode");
}

Histogram histogram(const Raster<float>& image, int bin_count, double lo, double hi, ChannelMode mode) {
  const auto samples = channel_samples(image, mode);
  return histogram(samples, bin_count, lo, hi);
}

double quantile(std::span<const float> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile q must lie in [0,1]");
  std::vector<float> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t i0 = static_cast<std::size_t>(std::floor(pos));
  const std::size_t i1 = std::min(i0 + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(i0);
  const double a = sorted[i0];
  const double b = sorted[i1];
  return frac == 0.0 ? a : a + frac * (b - a);
}

}  // namespace hdrrecon
