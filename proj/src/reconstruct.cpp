#include "hdrrecon/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdrrecon {
namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace

void ReconstructionConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
}

ImageHDR linearize(const ImageLDR& image, double gamma) {
  Raster<float> out(image.width(), image.height(), 3);
  float table[256];
  for (int k = 0; k < 256; ++k) table[k] = static_cast<float>(std::pow(k / 255.0, gamma));
  auto src = image.codes().data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = table[src[i]];
  return ImageHDR(std::move(out));
}

int next_multiple(int n, int multiple) {
  if (n < 1 || multiple < 1) throw std::invalid_argument("next_multiple needs positive arguments");
  return (n + multiple - 1) / multiple * multiple;
}

template <typename T>
Raster<T> pad_reflect(const Raster<T>& in, int width, int height) {
  if (width < in.width() || height < in.height()) throw std::invalid_argument("padding cannot shrink an image");
  Raster<T> out(width, height, in.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < in.channels(); ++c) out(x, y, c) = in(mirror(x, in.width()), mirror(y, in.height()), c);
  return out;
}

ImageLDR pad_to_multiple(const ImageLDR& image, int levels, PadRecord* record) {
  const int f = 1 << levels;
  PadRecord r{image.width(), image.height(), next_multiple(image.width(), f), next_multiple(image.height(), f)};
  if (record) *record = r;
  if (r.padded_width == r.width && r.padded_height == r.height) return image;
  return ImageLDR(pad_reflect(image.codes(), r.padded_width, r.padded_height));
}

template <typename T>
Raster<T> unpad(const Raster<T>& padded, const PadRecord& record) {
  if (padded.width() != record.padded_width || padded.height() != record.padded_height) {
    throw std::invalid_argument("raster does not match the pad record");
  }
  return crop(padded, 0, 0, record.width, record.height);
}

Raster<double> predict_log(const Network<float>& net, const ImageLDR& image) {
  PadRecord rec;
  const ImageLDR padded = pad_to_multiple(image, net.config().levels, &rec);
  const Tensor4<float> y = net.infer(to_tensor<float>(padded));
  Raster<double> full(rec.padded_width, rec.padded_height, 3);
  auto dst = full.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = y[i];
  return unpad(full, rec);
}

Raster<double> blend(const ImageLDR& image, const Raster<double>& log_prediction, const ReconstructionConfig& config) {
  config.validate();
  if (log_prediction.width() != image.width() || log_prediction.height() != image.height() ||
      log_prediction.channels() != 3) {
    throw std::invalid_argument("prediction does not match the input image");
  }
  double lin[256];
  for (int k = 0; k < 256; ++k) {
    const double d = k / 255.0;
    lin[k] = config.gamma == 2.0 ? d * d : std::pow(d, config.gamma);
  }
  Raster<double> out(image.width(), image.height(), 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      const int mx = std::max({image.code(x, y, 0), image.code(x, y, 1), image.code(x, y, 2)});
      const double a = blend_weight(mx / 255.0, config.tau);
      for (int c = 0; c < 3; ++c) {
        const double p = std::min(std::exp(log_prediction(x, y, c)), kMaxPrediction);
        out(x, y, c) = (1.0 - a) * lin[image.code(x, y, c)] + a * p;
      }
    }
  return out;
}

ImageHDR predict(const Network<float>& net, const ImageLDR& image, const ReconstructionConfig& config) {
  return to_image(blend(image, predict_log(net, image), config));
}

ImageHDR residual(const ImageHDR& image) {
  Raster<float> out = image.raster();
  for (float& v : out.data()) v = std::max(0.0f, v - 1.0f);
  return ImageHDR(std::move(out));
}

ImageHDR to_image(const Raster<double>& values) {
  Raster<float> out(values.width(), values.height(), values.channels());
  auto src = values.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]);
  return ImageHDR(std::move(out));
}

template Raster<std::uint8_t> pad_reflect(const Raster<std::uint8_t>&, int, int);
template Raster<float> pad_reflect(const Raster<float>&, int, int);
template Raster<double> pad_reflect(const Raster<double>&, int, int);
template Raster<std::uint8_t> unpad(const Raster<std::uint8_t>&, const PadRecord&);
template Raster<float> unpad(const Raster<float>&, const PadRecord&);
template Raster<double> unpad(const Raster<double>&, const PadRecord&);

}  // namespace hdrrecon
