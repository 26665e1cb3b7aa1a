#include "hdrrecon/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hdrrecon {
namespace {

void check_pair(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha) {
  if (yhat.channels() != 3 || !yhat.same_shape(y)) {
    throw std::invalid_argument("loss: prediction " + yhat.shape_string() + " vs target " + y.shape_string());
  }
  if (alpha.batch() != yhat.batch() || alpha.height() != yhat.height() || alpha.width() != yhat.width() ||
      alpha.channels() != 1) {
    throw std::invalid_argument("loss: mask " + alpha.shape_string() + " does not match " + yhat.shape_string());
  }
}

// One 1-D pass along x (horizontal) or y, with clamped indices.
Raster<double> blur_pass(const Raster<double>& in, const std::vector<double>& k, bool horizontal, bool adjoint) {
  const int w = in.width(), h = in.height(), r = static_cast<int>(k.size() / 2);
  Raster<double> out(w, h, 1, 0.0);
  const int len = horizontal ? w : h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int pos = horizontal ? x : y;
      for (int t = -r; t <= r; ++t) {
        const int q = std::clamp(pos + t, 0, len - 1);
        const int qx = horizontal ? q : x, qy = horizontal ? y : q;
        if (adjoint) {
          out(qx, qy, 0) += k[t + r] * in(x, y, 0);
        } else {
          out(x, y, 0) += k[t + r] * in(qx, qy, 0);
        }
      }
    }
  return out;
}

Raster<double> plane(const Tensor4<double>& t, int b) {
  Raster<double> r(t.width(), t.height(), 1);
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) r(x, y, 0) = t(b, y, x, 0);
  return r;
}

}  // namespace

LossMode loss_mode_named(const std::string& name) {
  if (name == "direct") return LossMode::direct;
  if (name == "ir" || name == "IR" || name == "I/R") return LossMode::ir;
  throw ConfigError("unknown loss '" + name + "' (expected direct or ir)");
}

std::string to_string(LossMode mode) { return mode == LossMode::direct ? "direct" : "ir"; }

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian sigma must be >= 0");
}

LossConfig LossConfig::from_key_values(const KeyValues& kv) {
  LossConfig c;
  if (kv.has("loss")) c.mode = loss_mode_named(kv.get("loss"));
  c.lambda = kv.get_double_or("lambda", c.lambda);
  c.tau = kv.get_double_or("tau", c.tau);
  c.epsilon = kv.get_double_or("epsilon", c.epsilon);
  c.sigma = kv.get_double_or("gaussian_sigma", c.sigma);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string LossConfig::to_text() const {
  std::ostringstream os;
  os << "loss = " << to_string(mode) << "\nlambda = " << format_double(lambda) << "\ntau = " << format_double(tau)
     << "\nepsilon = " << format_double(epsilon) << "\ngaussian_sigma = " << format_double(sigma) << "\n";
  return os.str();
}

double blend_weight(double max_value, double tau) { return std::max(0.0, max_value - tau) / (1.0 - tau); }

BlendMask blend_mask(const Raster<float>& display, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  if (display.channels() != 3) throw std::invalid_argument("blend mask needs an RGB image");
  BlendMask m{display.width(), display.height(), {}};
  m.alpha.reserve(display.pixel_count());
  for (int y = 0; y < display.height(); ++y)
    for (int x = 0; x < display.width(); ++x) {
      const double mx = std::max({display(x, y, 0), display(x, y, 1), display(x, y, 2)});
      m.alpha.push_back(blend_weight(mx, tau));
    }
  return m;
}

BlendMask blend_mask(const ImageLDR& display, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  BlendMask m{display.width(), display.height(), {}};
  m.alpha.reserve(display.codes().pixel_count());
  for (int y = 0; y < display.height(); ++y)
    for (int x = 0; x < display.width(); ++x) {
      const int mx = std::max({display.code(x, y, 0), display.code(x, y, 1), display.code(x, y, 2)});
      m.alpha.push_back(blend_weight(mx / 255.0, tau));
    }
  return m;
}

Tensor4<double> log_target(std::span<const ImageHDR> images, double epsilon) {
  if (images.empty()) throw std::invalid_argument("empty target batch");
  const int w = images[0].width(), h = images[0].height();
  Tensor4<double> t(static_cast<int>(images.size()), h, w, 3);
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b].width() != w || images[b].height() != h) throw std::invalid_argument("targets differ in size");
    auto src = images[b].data();
    const std::size_t off = t.index(static_cast<int>(b), 0, 0, 0);
    for (std::size_t i = 0; i < src.size(); ++i) t[off + i] = std::log(static_cast<double>(src[i]) + epsilon);
  }
  return t;
}

Tensor4<double> log_target(const ImageHDR& image, double epsilon) {
  return log_target(std::span<const ImageHDR>(&image, 1), epsilon);
}

Tensor4<double> mask_tensor(std::span<const BlendMask> masks) {
  if (masks.empty()) throw std::invalid_argument("empty mask batch");
  Tensor4<double> t(static_cast<int>(masks.size()), masks[0].height, masks[0].width, 1);
  for (std::size_t b = 0; b < masks.size(); ++b) {
    if (masks[b].width != masks[0].width || masks[b].height != masks[0].height) {
      throw std::invalid_argument("masks differ in size");
    }
    std::copy(masks[b].alpha.begin(), masks[b].alpha.end(), t.raw() + t.index(static_cast<int>(b), 0, 0, 0));
  }
  return t;
}

Tensor4<double> mask_tensor(const BlendMask& mask) { return mask_tensor(std::span<const BlendMask>(&mask, 1)); }

LossValue direct_loss(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha) {
  check_pair(yhat, y, alpha);
  const double n = static_cast<double>(yhat.pixels());
  LossValue out{0.0, Tensor4<double>(yhat.batch(), yhat.height(), yhat.width(), 3)};
  for (std::size_t p = 0; p < yhat.pixels(); ++p) {
    const double a2 = alpha[p] * alpha[p];
    for (int c = 0; c < 3; ++c) {
      const double d = yhat[p * 3 + c] - y[p * 3 + c];
      out.value += a2 * d * d;
      out.gradient[p * 3 + c] = 2.0 / (3.0 * n) * a2 * d;
    }
  }
  out.value /= 3.0 * n;
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian sigma must be >= 0");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  if (r == 0) return {1.0};
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) sum += k[t + r] = std::exp(-0.5 * t * t / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

Raster<double> gaussian_blur(const Raster<double>& image, double sigma) {
  if (image.channels() != 1) throw std::invalid_argument("gaussian_blur expects a single channel");
  const auto k = gaussian_kernel(sigma);
  return blur_pass(blur_pass(image, k, true, false), k, false, false);
}

Raster<double> gaussian_blur_adjoint(const Raster<double>& image, double sigma) {
  if (image.channels() != 1) throw std::invalid_argument("gaussian_blur expects a single channel");
  const auto k = gaussian_kernel(sigma);
  return blur_pass(blur_pass(image, k, false, true), k, true, true);
}

IrDecomposition decompose_ir(const Tensor4<double>& yhat, double sigma, const std::array<double, 3>& weights) {
  if (yhat.channels() != 3) throw std::invalid_argument("decompose_ir expects 3 channels");
  const int nb = yhat.batch(), h = yhat.height(), w = yhat.width();
  Tensor4<double> lum(nb, h, w, 1);
  for (std::size_t p = 0; p < yhat.pixels(); ++p) {
    const double m = std::max({yhat[p * 3], yhat[p * 3 + 1], yhat[p * 3 + 2]});
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += weights[c] * std::exp(yhat[p * 3 + c] - m);
    lum[p] = m + std::log(s);
  }
  IrDecomposition out{Tensor4<double>(nb, h, w, 1), Tensor4<double>(nb, h, w, 3)};
  for (int b = 0; b < nb; ++b) {
    const Raster<double> blurred = gaussian_blur(plane(lum, b), sigma);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.log_illuminance(b, y, x, 0) = blurred(x, y, 0);
  }
  for (std::size_t p = 0; p < yhat.pixels(); ++p)
    for (int c = 0; c < 3; ++c) out.log_reflectance[p * 3 + c] = yhat[p * 3 + c] - out.log_illuminance[p];
  return out;
}

IrLossValue ir_loss(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha,
                    double lambda, double sigma) {
  check_pair(yhat, y, alpha);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  const auto& wts = kLuminanceWeights;
  const IrDecomposition dp = decompose_ir(yhat, sigma, wts);
  const IrDecomposition dt = decompose_ir(y, sigma, wts);
  const int nb = yhat.batch(), h = yhat.height(), w = yhat.width();
  const double n = static_cast<double>(yhat.pixels());

  IrLossValue out;
  out.gradient = Tensor4<double>(nb, h, w, 3);
  Tensor4<double> g_illum(nb, h, w, 1);
  for (std::size_t p = 0; p < yhat.pixels(); ++p) {
    const double a2 = alpha[p] * alpha[p];
    const double di = dp.log_illuminance[p] - dt.log_illuminance[p];
    out.illuminance += a2 * di * di;
    double dr_sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double dr = dp.log_reflectance[p * 3 + c] - dt.log_reflectance[p * 3 + c];
      out.reflectance += a2 * dr * dr;
      dr_sum += dr;
      out.gradient[p * 3 + c] = 2.0 * (1.0 - lambda) / (3.0 * n) * a2 * dr;
    }
    g_illum[p] = 2.0 * lambda / n * a2 * di - 2.0 * (1.0 - lambda) / (3.0 * n) * a2 * dr_sum;
  }
  out.illuminance /= n;
  out.reflectance /= 3.0 * n;
  out.value = lambda * out.illuminance + (1.0 - lambda) * out.reflectance;

  for (int b = 0; b < nb; ++b) {
    const Raster<double> g_lum = gaussian_blur_adjoint(plane(g_illum, b), sigma);
    for (int yy = 0; yy < h; ++yy)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = yhat.index(b, yy, x, 0) / 3;
        const double m = std::max({yhat[p * 3], yhat[p * 3 + 1], yhat[p * 3 + 2]});
        double e[3], s = 0.0;
        for (int c = 0; c < 3; ++c) s += e[c] = wts[c] * std::exp(yhat[p * 3 + c] - m);
        for (int c = 0; c < 3; ++c) out.gradient[p * 3 + c] += g_lum(x, yy, 0) * e[c] / s;
      }
  }
  return out;
}

LossValue hdr_loss(const Tensor4<double>& yhat, const Tensor4<double>& y, const Tensor4<double>& alpha,
                   const LossConfig& config) {
  if (config.mode == LossMode::direct) return direct_loss(yhat, y, alpha);
  IrLossValue v = ir_loss(yhat, y, alpha, config.lambda, config.sigma);
  return LossValue{v.value, std::move(v.gradient)};
}

}  // namespace hdrrecon
