#include "hdrrecon/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hdrrecon::nn {

namespace {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Matrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Matrix<T>>;
template <typename T>
using RowMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using ConstRowMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

template <typename T>
ConstMatMap<T> as_matrix(const Tensor4<T>& t) {
  return ConstMatMap<T>(t.raw(), static_cast<Eigen::Index>(t.pixels()), t.channels());
}

template <typename T>
MatMap<T> as_matrix(Tensor4<T>& t) {
  return MatMap<T>(t.raw(), static_cast<Eigen::Index>(t.pixels()), t.channels());
}

int product(const std::vector<int>& s) { return std::accumulate(s.begin(), s.end(), 1, std::multiplies<>()); }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

template <typename T>
Param<T>::Param(std::string n, std::vector<int> s)
    : name(std::move(n)), shape(std::move(s)), value(product(shape), T(0)), grad(product(shape), T(0)) {}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel)
    : weight(name + ".weight", {kernel, kernel, in_channels, out_channels}),
      bias(name + ".bias", {out_channels}),
      in_(in_channels),
      out_(out_channels),
      k_(kernel) {
  require(kernel == 1 || kernel == 3, "conv kernel must be 1 or 3");
  require(in_channels > 0 && out_channels > 0, "conv channels must be positive");
}

template <typename T>
Tensor4<T> Conv2d<T>::forward(const Tensor4<T>& x, Cache* cache) const {
  require(x.channels() == in_, weight.name + ": expected " + std::to_string(in_) + " input channels, got " +
                                   std::to_string(x.channels()));
  const int n = x.batch(), h = x.height(), w = x.width();
  const Eigen::Index rows = static_cast<Eigen::Index>(x.pixels());
  const int kdim = k_ * k_ * in_;

  std::vector<T> local;
  std::vector<T>& col = cache ? cache->columns : local;
  if (k_ == 1) {
    col.assign(x.data().begin(), x.data().end());
  } else {
    col.assign(static_cast<std::size_t>(rows) * kdim, T(0));
    T* dst = col.data();
    for (int b = 0; b < n; ++b)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            for (int kx = 0; kx < 3; ++kx, dst += in_) {
              const int sx = xx + kx - 1;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              const T* src = x.raw() + x.index(b, sy, sx, 0);
              std::copy(src, src + in_, dst);
            }
          }
        }
  }
  if (cache) {
    cache->batch = n;
    cache->height = h;
    cache->width = w;
  }

  Tensor4<T> y(n, h, w, out_);
  auto ym = as_matrix(y);
  ym.noalias() = ConstMatMap<T>(col.data(), rows, kdim) * ConstMatMap<T>(weight.value.data(), kdim, out_);
  ym.rowwise() += ConstRowMap<T>(bias.value.data(), out_);
  return y;
}

template <typename T>
Tensor4<T> Conv2d<T>::backward(const Tensor4<T>& dy, const Cache& cache, bool need_input_grad) {
  const int n = cache.batch, h = cache.height, w = cache.width;
  require(dy.batch() == n && dy.height() == h && dy.width() == w && dy.channels() == out_,
          weight.name + ": gradient shape mismatch");
  const Eigen::Index rows = static_cast<Eigen::Index>(dy.pixels());
  const int kdim = k_ * k_ * in_;
  ConstMatMap<T> col(cache.columns.data(), rows, kdim);
  auto dym = as_matrix(dy);

  MatMap<T>(weight.grad.data(), kdim, out_).noalias() += col.transpose() * dym;
  RowMap<T>(bias.grad.data(), out_) += dym.colwise().sum();
  if (!need_input_grad) return {};

  const ConstMatMap<T> wm(weight.value.data(), kdim, out_);
  Tensor4<T> dx(n, h, w, in_);
  if (k_ == 1) {
    as_matrix(dx).noalias() = dym * wm.transpose();
    return dx;
  }
  Matrix<T> dcol = dym * wm.transpose();
  const T* src = dcol.data();
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          for (int kx = 0; kx < 3; ++kx, src += in_) {
            const int sx = xx + kx - 1;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            T* dst = dx.raw() + dx.index(b, sy, sx, 0);
            for (int c = 0; c < in_; ++c) dst[c] += src[c];
          }
        }
  return dx;
}

template <typename T>
void Conv2d<T>::init_xavier(Rng& rng) {
  const double fan_in = static_cast<double>(k_) * k_ * in_;
  const double fan_out = static_cast<double>(k_) * k_ * out_;
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : weight.value) v = static_cast<T>(dist(rng));
  std::fill(bias.value.begin(), bias.value.end(), T(0));
}

// ---------------------------------------------------------------------------
// MaxPool2

template <typename T>
Tensor4<T> MaxPool2<T>::forward(const Tensor4<T>& x, Cache* cache) const {
  require(x.height() % 2 == 0 && x.width() % 2 == 0, "max pooling needs even spatial dims, got " + x.shape_string());
  const int n = x.batch(), h = x.height() / 2, w = x.width() / 2, c = x.channels();
  Tensor4<T> y(n, h, w, c);
  if (cache) {
    cache->argmax.resize(y.size());
    cache->batch = x.batch();
    cache->height = x.height();
    cache->width = x.width();
    cache->channels = c;
  }
  std::size_t o = 0;
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = x.index(b, 2 * i, 2 * j, ch);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = x.index(b, 2 * i + dy, 2 * j + dx, ch);
              if (x[idx] > x[best]) best = idx;
            }
          y[o] = x[best];
          if (cache) cache->argmax[o] = static_cast<std::uint32_t>(best);
        }
  return y;
}

template <typename T>
Tensor4<T> MaxPool2<T>::backward(const Tensor4<T>& dy, const Cache& cache) const {
  require(dy.size() == cache.argmax.size(), "max pooling gradient shape mismatch");
  Tensor4<T> dx(cache.batch, cache.height, cache.width, cache.channels);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[cache.argmax[o]] += dy[o];
  return dx;
}

// ---------------------------------------------------------------------------
// Deconv2x

template <typename T>
Deconv2x<T>::Deconv2x(const std::string& name, int in_channels, int out_channels)
    : weight(name + ".weight", {in_channels, 4, 4, out_channels}),
      bias(name + ".bias", {out_channels}),
      in_(in_channels),
      out_(out_channels) {
  require(in_channels > 0 && out_channels > 0, "deconv channels must be positive");
}

template <typename T>
Tensor4<T> Deconv2x<T>::forward(const Tensor4<T>& x, Cache* cache) const {
  require(x.channels() == in_, weight.name + ": expected " + std::to_string(in_) + " input channels");
  const int n = x.batch(), h = x.height(), w = x.width();
  const int cols_per_px = 16 * out_;
  Matrix<T> cols = as_matrix(x) * ConstMatMap<T>(weight.value.data(), in_, cols_per_px);

  Tensor4<T> y(n, 2 * h, 2 * w, out_);
  as_matrix(y).rowwise() = ConstRowMap<T>(bias.value.data(), out_);
  const T* src = cols.data();
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j, src += cols_per_px)
        for (int ky = 0; ky < 4; ++ky) {
          const int oy = 2 * i - 1 + ky;
          if (oy < 0 || oy >= 2 * h) continue;
          for (int kx = 0; kx < 4; ++kx) {
            const int ox = 2 * j - 1 + kx;
            if (ox < 0 || ox >= 2 * w) continue;
            const T* tap = src + (ky * 4 + kx) * out_;
            T* dst = y.raw() + y.index(b, oy, ox, 0);
            for (int c = 0; c < out_; ++c) dst[c] += tap[c];
          }
        }
  if (cache) cache->input = x;
  return y;
}

template <typename T>
Tensor4<T> Deconv2x<T>::backward(const Tensor4<T>& dy, const Cache& cache) {
  const Tensor4<T>& x = cache.input;
  const int n = x.batch(), h = x.height(), w = x.width();
  require(dy.batch() == n && dy.height() == 2 * h && dy.width() == 2 * w && dy.channels() == out_,
          weight.name + ": gradient shape mismatch");
  const int cols_per_px = 16 * out_;
  Matrix<T> dcols = Matrix<T>::Zero(static_cast<Eigen::Index>(x.pixels()), cols_per_px);
  T* dst = dcols.data();
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j, dst += cols_per_px)
        for (int ky = 0; ky < 4; ++ky) {
          const int oy = 2 * i - 1 + ky;
          if (oy < 0 || oy >= 2 * h) continue;
          for (int kx = 0; kx < 4; ++kx) {
            const int ox = 2 * j - 1 + kx;
            if (ox < 0 || ox >= 2 * w) continue;
            const T* g = dy.raw() + dy.index(b, oy, ox, 0);
            std::copy(g, g + out_, dst + (ky * 4 + kx) * out_);
          }
        }
  const auto xm = as_matrix(x);
  MatMap<T>(weight.grad.data(), in_, cols_per_px).noalias() += xm.transpose() * dcols;
  RowMap<T>(bias.grad.data(), out_) += as_matrix(dy).colwise().sum();
  Tensor4<T> dx(n, h, w, in_);
  as_matrix(dx).noalias() = dcols * ConstMatMap<T>(weight.value.data(), in_, cols_per_px).transpose();
  return dx;
}

template <typename T>
void Deconv2x<T>::init_bilinear() {
  std::fill(weight.value.begin(), weight.value.end(), T(0));
  std::fill(bias.value.begin(), bias.value.end(), T(0));
  const int diag = std::min(in_, out_);
  for (int c = 0; c < diag; ++c)
    for (int ky = 0; ky < 4; ++ky)
      for (int kx = 0; kx < 4; ++kx) {
        weight.value[((static_cast<std::size_t>(c) * 4 + ky) * 4 + kx) * out_ + c] =
            static_cast<T>(kBilinearTaps[ky] * kBilinearTaps[kx]);
      }
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(const std::string& name, int channels)
    : gamma(name + ".gamma", {channels}),
      beta(name + ".beta", {channels}),
      running_mean(name + ".running_mean", {channels}),
      running_var(name + ".running_var", {channels}),
      channels_(channels) {
  std::fill(gamma.value.begin(), gamma.value.end(), T(1));
  std::fill(running_var.value.begin(), running_var.value.end(), T(1));
}

template <typename T>
Tensor4<T> BatchNorm<T>::normalize_with(const Tensor4<T>& x, const std::vector<T>& mean,
                                        const std::vector<T>& inv_std, Cache* cache) const {
  Tensor4<T> y(x.batch(), x.height(), x.width(), channels_);
  if (cache) {
    cache->normalized.resize(x.size());
    cache->inv_std = inv_std;
    cache->batch = x.batch();
    cache->height = x.height();
    cache->width = x.width();
  }
  const std::size_t m = x.pixels();
  for (std::size_t p = 0; p < m; ++p)
    for (int c = 0; c < channels_; ++c) {
      const std::size_t i = p * channels_ + c;
      const T xhat = (x[i] - mean[c]) * inv_std[c];
      if (cache) cache->normalized[i] = xhat;
      y[i] = gamma.value[c] * xhat + beta.value[c];
    }
  return y;
}

template <typename T>
Tensor4<T> BatchNorm<T>::forward(const Tensor4<T>& x, Mode mode, Cache* cache) {
  require(x.channels() == channels_, gamma.name + ": channel mismatch");
  if (cache) cache->mode = mode;
  if (mode == Mode::inference) {
    std::vector<T> mean(running_mean.value), inv_std(channels_);
    for (int c = 0; c < channels_; ++c) inv_std[c] = T(1) / std::sqrt(running_var.value[c] + T(kBatchNormEpsilon));
    return normalize_with(x, mean, inv_std, cache);
  }
  const std::size_t m = x.pixels();
  std::vector<double> sum(channels_, 0.0), sq(channels_, 0.0);
  for (std::size_t p = 0; p < m; ++p)
    for (int c = 0; c < channels_; ++c) sum[c] += x[p * channels_ + c];
  std::vector<T> mean(channels_), var(channels_), inv_std(channels_);
  for (int c = 0; c < channels_; ++c) mean[c] = static_cast<T>(sum[c] / static_cast<double>(m));
  for (std::size_t p = 0; p < m; ++p)
    for (int c = 0; c < channels_; ++c) {
      const double d = static_cast<double>(x[p * channels_ + c]) - mean[c];
      sq[c] += d * d;
    }
  for (int c = 0; c < channels_; ++c) {
    var[c] = static_cast<T>(sq[c] / static_cast<double>(m));
    inv_std[c] = T(1) / std::sqrt(var[c] + T(kBatchNormEpsilon));
    running_mean.value[c] = static_cast<T>(kBatchNormMomentum * running_mean.value[c] + (1.0 - kBatchNormMomentum) * mean[c]);
    running_var.value[c] = static_cast<T>(kBatchNormMomentum * running_var.value[c] + (1.0 - kBatchNormMomentum) * var[c]);
  }
  return normalize_with(x, mean, inv_std, cache);
}

template <typename T>
Tensor4<T> BatchNorm<T>::infer(const Tensor4<T>& x) const {
  require(x.channels() == channels_, gamma.name + ": channel mismatch");
  std::vector<T> mean(running_mean.value), inv_std(channels_);
  for (int c = 0; c < channels_; ++c) inv_std[c] = T(1) / std::sqrt(running_var.value[c] + T(kBatchNormEpsilon));
  return normalize_with(x, mean, inv_std, nullptr);
}

template <typename T>
Tensor4<T> BatchNorm<T>::backward(const Tensor4<T>& dy, const Cache& cache) {
  require(dy.size() == cache.normalized.size() && dy.channels() == channels_, gamma.name + ": gradient shape mismatch");
  const std::size_t m = dy.pixels();
  std::vector<double> sum_dy(channels_, 0.0), sum_dy_xhat(channels_, 0.0);
  for (std::size_t p = 0; p < m; ++p)
    for (int c = 0; c < channels_; ++c) {
      const std::size_t i = p * channels_ + c;
      sum_dy[c] += dy[i];
      sum_dy_xhat[c] += static_cast<double>(dy[i]) * cache.normalized[i];
    }
  for (int c = 0; c < channels_; ++c) {
    gamma.grad[c] += static_cast<T>(sum_dy_xhat[c]);
    beta.grad[c] += static_cast<T>(sum_dy[c]);
  }
  Tensor4<T> dx(dy.batch(), dy.height(), dy.width(), channels_);
  if (cache.mode == Mode::inference) {
    for (std::size_t p = 0; p < m; ++p)
      for (int c = 0; c < channels_; ++c) {
        const std::size_t i = p * channels_ + c;
        dx[i] = dy[i] * gamma.value[c] * cache.inv_std[c];
      }
    return dx;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t p = 0; p < m; ++p)
    for (int c = 0; c < channels_; ++c) {
      const std::size_t i = p * channels_ + c;
      const double g = static_cast<double>(gamma.value[c]) * cache.inv_std[c];
      dx[i] = static_cast<T>(g * (dy[i] - inv_m * sum_dy[c] - cache.normalized[i] * inv_m * sum_dy_xhat[c]));
    }
  return dx;
}

// ---------------------------------------------------------------------------
// Relu

template <typename T>
void Relu<T>::forward(Tensor4<T>& x, Cache* cache) {
  if (cache) cache->active.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on = x[i] > T(0);
    if (!on) x[i] = T(0);
    if (cache) cache->active[i] = on;
  }
}

template <typename T>
void Relu<T>::backward(Tensor4<T>& dy, const Cache& cache) {
  require(dy.size() == cache.active.size(), "relu gradient shape mismatch");
  for (std::size_t i = 0; i < dy.size(); ++i)
    if (!cache.active[i]) dy[i] = T(0);
}

// ---------------------------------------------------------------------------
// SkipFuse

template <typename T>
SkipFuse<T>::SkipFuse(const std::string& name, int channels, double epsilon)
    : weight(name + ".weight", {2 * channels, channels}), bias(name + ".bias", {channels}), k_(channels), eps_(epsilon) {
  require(channels > 0, "skip fusion channels must be positive");
  require(epsilon > 0.0, "skip fusion epsilon must be positive");
}

template <typename T>
Tensor4<T> SkipFuse<T>::forward(const Tensor4<T>& decoder, const Tensor4<T>& encoder, Cache* cache) const {
  require(decoder.same_shape(encoder), weight.name + ": decoder " + decoder.shape_string() + " vs encoder " +
                                           encoder.shape_string());
  require(decoder.channels() == k_, weight.name + ": expected " + std::to_string(k_) + " channels");
  const std::size_t m = decoder.pixels();
  const T eps = static_cast<T>(eps_);
  std::vector<T> local;
  std::vector<T>& concat = cache ? cache->concat : local;
  concat.resize(m * 2 * k_);
  for (std::size_t p = 0; p < m; ++p) {
    T* row = concat.data() + p * 2 * k_;
    const T* hd = decoder.raw() + p * k_;
    const T* he = encoder.raw() + p * k_;
    for (int c = 0; c < k_; ++c) {
      row[c] = hd[c];
      row[k_ + c] = std::log(he[c] * he[c] + eps);
    }
  }
  Tensor4<T> y(decoder.batch(), decoder.height(), decoder.width(), k_);
  auto ym = as_matrix(y);
  ym.noalias() = ConstMatMap<T>(concat.data(), static_cast<Eigen::Index>(m), 2 * k_) *
                 ConstMatMap<T>(weight.value.data(), 2 * k_, k_);
  ym.rowwise() += ConstRowMap<T>(bias.value.data(), k_);
  if (cache) {
    cache->active.resize(y.size());
    cache->encoder = encoder;
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool on = y[i] > T(0);
    if (!on) y[i] = T(0);
    if (cache) cache->active[i] = on;
  }
  return y;
}

template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> SkipFuse<T>::backward(const Tensor4<T>& dy, const Cache& cache) {
  require(dy.size() == cache.active.size() && dy.channels() == k_, weight.name + ": gradient shape mismatch");
  const std::size_t m = dy.pixels();
  Tensor4<T> dpre = dy;
  for (std::size_t i = 0; i < dpre.size(); ++i)
    if (!cache.active[i]) dpre[i] = T(0);
  const auto dm = as_matrix(dpre);
  ConstMatMap<T> concat(cache.concat.data(), static_cast<Eigen::Index>(m), 2 * k_);
  MatMap<T>(weight.grad.data(), 2 * k_, k_).noalias() += concat.transpose() * dm;
  RowMap<T>(bias.grad.data(), k_) += dm.colwise().sum();
  Matrix<T> dconcat = dm * ConstMatMap<T>(weight.value.data(), 2 * k_, k_).transpose();

  Tensor4<T> dd(dy.batch(), dy.height(), dy.width(), k_);
  Tensor4<T> de(dy.batch(), dy.height(), dy.width(), k_);
  const T eps = static_cast<T>(eps_);
  for (std::size_t p = 0; p < m; ++p) {
    const T* row = dconcat.data() + p * 2 * k_;
    for (int c = 0; c < k_; ++c) {
      const std::size_t i = p * k_ + c;
      const T he = cache.encoder[i];
      dd[i] = row[c];
      de[i] = row[k_ + c] * T(2) * he / (he * he + eps);
    }
  }
  return {std::move(dd), std::move(de)};
}

template <typename T>
void SkipFuse<T>::init_identity_sum() {
  std::fill(weight.value.begin(), weight.value.end(), T(0));
  std::fill(bias.value.begin(), bias.value.end(), T(0));
  for (int c = 0; c < k_; ++c) {
    weight.value[static_cast<std::size_t>(c) * k_ + c] = T(1);
    weight.value[static_cast<std::size_t>(k_ + c) * k_ + c] = T(1);
  }
}

template struct Param<float>;
template struct Param<double>;
template class Conv2d<float>;
template class Conv2d<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class Deconv2x<float>;
template class Deconv2x<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template struct Relu<float>;
template struct Relu<double>;
template class SkipFuse<float>;
template class SkipFuse<double>;

}  // namespace hdrrecon::nn
