#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hdrrecon/image.hpp"

namespace hdrrecon {

struct Histogram {
  std::vector<double> bin_edges;  // bin_count + 1 strictly increasing edges
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t bin_count() const { return counts.size(); }
  /// Fraction of samples in bin i.
  double mass(std::size_t i) const { return total ? static_cast<double>(counts[i]) / total : 0.0; }
};

/// Which per-pixel quantity an image histogram counts.
enum class ChannelMode { per_channel, luminance, max_channel };

/// Uniform bins over [lo, hi]. The upper edge belongs to the last bin; samples
/// outside the range are clamped into the first or last bin so sum(counts) == total.
Histogram histogram(std::span<const float> values, int bin_count, double lo, double hi);
Histogram histogram(const Raster<float>& image, int bin_count, double lo, double hi,
                    ChannelMode mode = ChannelMode::per_channel);

/// Exact order-statistic quantile with linear interpolation between neighbours:
/// position q * (n - 1) in the sorted sample.
double quantile(std::span<const float> values, double q);

/// Samples of `image` selected by `mode`, in raster order.
std::vector<float> channel_samples(const Raster<float>& image, ChannelMode mode);

}  // namespace hdrrecon
