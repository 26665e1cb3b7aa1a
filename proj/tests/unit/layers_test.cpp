#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "hdrrecon/layers.hpp"
#include "hdrrecon/network.hpp"

using namespace hdrrecon;
using namespace hdrrecon::nn;

namespace {

Tensor4<double> random_tensor(int n, int h, int w, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor4<double> t(n, h, w, c);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

void randomize(Param<double>& p, Rng& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : p.value) v = u(rng);
  std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

double dot(const Tensor4<double>& a, const Tensor4<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Largest |analytic - numeric| relative to max(1, |numeric|) over every entry
// of `values`, for the scalar objective f.
double max_fd_error(std::vector<double>& values, const std::vector<double>& analytic,
                    const std::function<double()>& f, double h = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = f();
    values[i] = keep - h;
    const double down = f();
    values[i] = keep;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

std::vector<double> as_vector(const Tensor4<double>& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_SUITE("layers") {
  TEST_CASE("conv gradients match finite differences") {
    for (int k : {1, 3}) {
      CAPTURE(k);
      Rng rng(10 + k);
      Conv2d<double> conv("c", 3, 4, k);
      randomize(conv.weight, rng);
      randomize(conv.bias, rng);
      Tensor4<double> x = random_tensor(2, 5, 4, 3, rng);
      const auto r = random_tensor(2, 5, 4, 4, rng);
      Conv2d<double>::Cache cache;
      conv.forward(x, &cache);
      const auto dx = conv.backward(r, cache);

      std::vector<double> xv = as_vector(x);
      auto f_x = [&] {
        Tensor4<double> xx(2, 5, 4, 3);
        std::copy(xv.begin(), xv.end(), xx.data().begin());
        return dot(conv.forward(xx, nullptr), r);
      };
      CHECK(max_fd_error(xv, as_vector(dx), f_x) < 1e-7);
      auto f_p = [&] { return dot(conv.forward(x, nullptr), r); };
      CHECK(max_fd_error(conv.weight.value, conv.weight.grad, f_p) < 1e-7);
      CHECK(max_fd_error(conv.bias.value, conv.bias.grad, f_p) < 1e-7);
    }
  }

  TEST_CASE("conv rejects channel mismatch") {
    Conv2d<double> conv("c", 3, 4, 3);
    CHECK_THROWS_AS(conv.forward(Tensor4<double>(1, 4, 4, 2), nullptr), std::invalid_argument);
  }

  TEST_CASE("xavier initialisation bounds") {
    Rng rng(1);
    Conv2d<double> conv("c", 16, 32, 3);
    conv.init_xavier(rng);
    const double limit = std::sqrt(6.0 / (9.0 * 16 + 9.0 * 32));
    const auto [lo, hi] = std::minmax_element(conv.weight.value.begin(), conv.weight.value.end());
    CHECK(*lo >= -limit);
    CHECK(*hi <= limit);
    CHECK(*hi - *lo > limit);
    for (double b : conv.bias.value) CHECK(b == 0.0);
  }

  TEST_CASE("maxpool routes gradient to the argmax") {
    Tensor4<double> x(1, 2, 4, 1);
    const double vals[] = {1, 5, 2, 0, 3, 4, 9, 8};
    std::copy(std::begin(vals), std::end(vals), x.data().begin());
    MaxPool2<double> pool;
    MaxPool2<double>::Cache cache;
    const auto y = pool.forward(x, &cache);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == 5);
    CHECK(y[1] == 9);
    Tensor4<double> dy(1, 1, 2, 1);
    dy[0] = 1.5;
    dy[1] = -2.0;
    const auto dx = pool.backward(dy, cache);
    const double expect[] = {0, 1.5, 0, 0, 0, 0, -2.0, 0};
    for (int i = 0; i < 8; ++i) CHECK(dx[i] == expect[i]);
    CHECK_THROWS_AS(pool.forward(Tensor4<double>(1, 3, 4, 1), nullptr), std::invalid_argument);
  }

  TEST_CASE("deconv doubles the size and its gradients match finite differences") {
    Rng rng(20);
    Deconv2x<double> up("d", 3, 2);
    randomize(up.weight, rng);
    randomize(up.bias, rng);
    Tensor4<double> x = random_tensor(2, 3, 4, 3, rng);
    const auto r = random_tensor(2, 6, 8, 2, rng);
    Deconv2x<double>::Cache cache;
    const auto y = up.forward(x, &cache);
    CHECK(y.height() == 6);
    CHECK(y.width() == 8);
    const auto dx = up.backward(r, cache);

    std::vector<double> xv = as_vector(x);
    auto f_x = [&] {
      Tensor4<double> xx(2, 3, 4, 3);
      std::copy(xv.begin(), xv.end(), xx.data().begin());
      return dot(up.forward(xx, nullptr), r);
    };
    CHECK(max_fd_error(xv, as_vector(dx), f_x) < 1e-7);
    auto f_p = [&] { return dot(up.forward(x, nullptr), r); };
    CHECK(max_fd_error(up.weight.value, up.weight.grad, f_p) < 1e-7);
    CHECK(max_fd_error(up.bias.value, up.bias.grad, f_p) < 1e-7);
  }

  TEST_CASE("bilinear deconv reproduces constants and ramps in the interior") {
    Deconv2x<double> up("d", 1, 1);
    up.init_bilinear();
    Tensor4<double> c(1, 6, 6, 1, 2.5);
    const auto yc = up.forward(c, nullptr);
    Tensor4<double> ramp(1, 6, 6, 1);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) ramp(0, y, x, 0) = 0.75 * x - 1.0;
    const auto yr = up.forward(ramp, nullptr);
    for (int y = 2; y < 10; ++y)
      for (int x = 2; x < 10; ++x) {
        CHECK(std::abs(yc(0, y, x, 0) - 2.5) < 1e-6);
        // Output pixel x sits at input coordinate (x - 0.5) / 2.
        CHECK(std::abs(yr(0, y, x, 0) - (0.75 * (x - 0.5) / 2.0 - 1.0)) < 1e-6);
      }
  }

  TEST_CASE("bilinear deconv keeps channels separate") {
    Deconv2x<double> up("d", 2, 2);
    up.init_bilinear();
    Tensor4<double> x(1, 4, 4, 2);
    for (int y = 0; y < 4; ++y)
      for (int i = 0; i < 4; ++i) x(0, y, i, 0) = 1.0;
    const auto y = up.forward(x, nullptr);
    for (int yy = 0; yy < 8; ++yy)
      for (int xx = 0; xx < 8; ++xx) CHECK(y(0, yy, xx, 1) == 0.0);
  }

  TEST_CASE("batchnorm train-mode gradients match finite differences") {
    Rng rng(30);
    BatchNorm<double> bn("bn", 3);
    randomize(bn.gamma, rng, 1.5);
    randomize(bn.beta, rng);
    Tensor4<double> x = random_tensor(2, 3, 3, 3, rng);
    const auto r = random_tensor(2, 3, 3, 3, rng);
    BatchNorm<double>::Cache cache;
    bn.forward(x, Mode::train, &cache);
    const auto dx = bn.backward(r, cache);

    std::vector<double> xv = as_vector(x);
    auto f_x = [&] {
      Tensor4<double> xx(2, 3, 3, 3);
      std::copy(xv.begin(), xv.end(), xx.data().begin());
      return dot(bn.forward(xx, Mode::train, nullptr), r);
    };
    CHECK(max_fd_error(xv, as_vector(dx), f_x) < 1e-6);
    auto f_p = [&] { return dot(bn.forward(x, Mode::train, nullptr), r); };
    CHECK(max_fd_error(bn.gamma.value, bn.gamma.grad, f_p) < 1e-7);
    CHECK(max_fd_error(bn.beta.value, bn.beta.grad, f_p) < 1e-7);
  }

  TEST_CASE("batchnorm inference is a per-channel affine map") {
    Rng rng(31);
    BatchNorm<double> bn("bn", 2);
    bn.gamma.value = {2.0, -1.0};
    bn.beta.value = {0.5, 0.0};
    bn.running_mean.value = {1.0, -3.0};
    bn.running_var.value = {4.0, 0.25};
    const auto x = random_tensor(1, 2, 2, 2, rng, -5, 5);
    const auto y = bn.infer(x);
    for (std::size_t p = 0; p < x.pixels(); ++p)
      for (int c = 0; c < 2; ++c) {
        const double inv = 1.0 / std::sqrt(bn.running_var.value[c] + kBatchNormEpsilon);
        const double expect = bn.gamma.value[c] * (x[p * 2 + c] - bn.running_mean.value[c]) * inv + bn.beta.value[c];
        CHECK(y[p * 2 + c] == doctest::Approx(expect).epsilon(1e-12));
      }
    // The inference-mode forward agrees with infer and leaves the running statistics alone.
    const auto y2 = bn.forward(x, Mode::inference, nullptr);
    CHECK(y2 == y);
    CHECK(bn.running_mean.value == std::vector<double>{1.0, -3.0});
  }

  TEST_CASE("batchnorm modes agree when batch statistics equal running statistics") {
    Rng rng(32);
    BatchNorm<double> bn("bn", 3);
    randomize(bn.gamma, rng, 2.0);
    randomize(bn.beta, rng);
    const auto x = random_tensor(2, 4, 4, 3, rng, -2, 3);
    const auto train = bn.forward(x, Mode::train, nullptr);
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0, var = 0.0;
      for (std::size_t p = 0; p < x.pixels(); ++p) mean += x[p * 3 + c];
      mean /= x.pixels();
      for (std::size_t p = 0; p < x.pixels(); ++p) var += (x[p * 3 + c] - mean) * (x[p * 3 + c] - mean);
      bn.running_mean.value[c] = mean;
      bn.running_var.value[c] = var / x.pixels();
    }
    const auto inf = bn.infer(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(inf[i] == doctest::Approx(train[i]).epsilon(1e-10));
  }

  TEST_CASE("batchnorm running statistics use momentum") {
    BatchNorm<double> bn("bn", 1);
    Tensor4<double> x(1, 1, 2, 1);
    x[0] = 1.0;
    x[1] = 3.0;
    bn.forward(x, Mode::train, nullptr);
    CHECK(bn.running_mean.value[0] == doctest::Approx((1 - kBatchNormMomentum) * 2.0));
    CHECK(bn.running_var.value[0] == doctest::Approx(kBatchNormMomentum + (1 - kBatchNormMomentum) * 1.0));
  }

  TEST_CASE("skip fusion worked examples") {
    SkipFuse<double> fuse("f", 1, kLogEpsilon);
    fuse.init_identity_sum();
    Tensor4<double> d(1, 1, 1, 1, 0.5), e(1, 1, 1, 1, 1.0);
    CHECK(fuse.forward(d, e, nullptr)[0] == doctest::Approx(0.5039138993211363).epsilon(1e-14));

    Tensor4<double> d2(1, 1, 1, 1, 6.0), zero(1, 1, 1, 1, 0.0);
    CHECK(fuse.forward(d2, zero, nullptr)[0] == doctest::Approx(6.0 - 5.541263545158426).epsilon(1e-14));
    Tensor4<double> d3(1, 1, 1, 1, 2.0);
    CHECK(fuse.forward(d3, zero, nullptr)[0] == 0.0);

    std::fill(fuse.weight.value.begin(), fuse.weight.value.end(), 0.0);
    CHECK(fuse.forward(d, e, nullptr)[0] == 0.0);
  }

  TEST_CASE("skip fusion at init is relu of the sum") {
    Rng rng(40);
    SkipFuse<double> fuse("f", 4, kLogEpsilon);
    fuse.init_identity_sum();
    const auto d = random_tensor(2, 3, 3, 4, rng, -3, 8);
    const auto e = random_tensor(2, 3, 3, 4, rng, 0, 2);
    const auto y = fuse.forward(d, e, nullptr);
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(y[i] == std::max(0.0, d[i] + std::log(e[i] * e[i] + kLogEpsilon)));
  }

  TEST_CASE("skip fusion gradients match finite differences") {
    Rng rng(41);
    SkipFuse<double> fuse("f", 3, kLogEpsilon);
    randomize(fuse.weight, rng);
    randomize(fuse.bias, rng, 2.0);
    Tensor4<double> d = random_tensor(1, 3, 3, 3, rng, -1, 1);
    Tensor4<double> e = random_tensor(1, 3, 3, 3, rng, 0.1, 2);
    const auto r = random_tensor(1, 3, 3, 3, rng);
    SkipFuse<double>::Cache cache;
    const auto y = fuse.forward(d, e, &cache);
    const auto [dd, de] = fuse.backward(r, cache);

    std::vector<double> dv = as_vector(d), ev = as_vector(e);
    auto rebuild = [](const std::vector<double>& v) {
      Tensor4<double> t(1, 3, 3, 3);
      std::copy(v.begin(), v.end(), t.data().begin());
      return t;
    };
    auto f = [&] { return dot(fuse.forward(rebuild(dv), rebuild(ev), nullptr), r); };
    CHECK(max_fd_error(dv, as_vector(dd), f) < 1e-7);
    CHECK(max_fd_error(ev, as_vector(de), f) < 1e-6);
    CHECK(max_fd_error(fuse.weight.value, fuse.weight.grad, f) < 1e-7);
    CHECK(max_fd_error(fuse.bias.value, fuse.bias.grad, f) < 1e-7);
  }

  TEST_CASE("skip fusion rejects mismatched shapes") {
    SkipFuse<double> fuse("f", 2, kLogEpsilon);
    CHECK_THROWS_AS(fuse.forward(Tensor4<double>(1, 2, 2, 2), Tensor4<double>(1, 2, 2, 3), nullptr),
                    std::invalid_argument);
  }

  TEST_CASE("relu mask") {
    Tensor4<double> x(1, 1, 1, 4);
    x[0] = -1;
    x[1] = 0;
    x[2] = 2;
    x[3] = 0.5;
    Relu<double>::Cache cache;
    Relu<double>::forward(x, &cache);
    CHECK(x[0] == 0);
    CHECK(x[2] == 2);
    Tensor4<double> dy(1, 1, 1, 4, 1.0);
    Relu<double>::backward(dy, cache);
    CHECK(dy[0] == 0);
    CHECK(dy[1] == 0);
    CHECK(dy[2] == 1);
    CHECK(dy[3] == 1);
  }
}
