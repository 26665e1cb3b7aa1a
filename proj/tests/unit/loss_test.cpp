#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hdrrecon/loss.hpp"

using namespace hdrrecon;

namespace {

Tensor4<double> random_tensor(int n, int h, int w, int c, Rng& rng, double lo, double hi) {
  Tensor4<double> t(n, h, w, c);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

double max_rel_fd_error(Tensor4<double> yhat, const std::function<LossValue(const Tensor4<double>&)>& loss) {
  const auto analytic = loss(yhat).gradient;
  double num = 0.0, den = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double keep = yhat[i];
    yhat[i] = keep + h;
    const double up = loss(yhat).value;
    yhat[i] = keep - h;
    const double down = loss(yhat).value;
    yhat[i] = keep;
    const double fd = (up - down) / (2 * h);
    num = std::max(num, std::abs(fd - analytic[i]));
    den = std::max(den, std::abs(fd));
  }
  return num / den;
}

}  // namespace

TEST_SUITE("loss") {
  TEST_CASE("blend weight examples") {
    CHECK(blend_weight(0.99, 0.95) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(blend_weight(0.95, 0.95) == 0.0);
    CHECK(blend_weight(0.3, 0.95) == 0.0);
    CHECK(blend_weight(1.0, 0.95) == doctest::Approx(1.0).epsilon(1e-15));

    Raster<float> px(2, 1, 3);
    px(0, 0, 0) = 0.96f;
    px(0, 0, 1) = 0.99f;
    px(0, 0, 2) = 0.80f;
    px(1, 0, 1) = 1.0f;
    const auto mask = blend_mask(px, 0.95);
    CHECK(mask(0, 0) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(mask(1, 0) == doctest::Approx(1.0));

    Raster<std::uint8_t> codes(1, 1, 3, 242);  // 0.949... <= 0.95
    CHECK(blend_mask(ImageLDR(codes), 0.95)(0, 0) == 0.0);
  }

  TEST_CASE("direct loss hand example") {
    Tensor4<double> y(1, 1, 1, 3, 0.2), yhat(1, 1, 1, 3, 0.5), alpha(1, 1, 1, 1, 1.0);
    const auto l = direct_loss(yhat, y, alpha);
    CHECK(l.value == doctest::Approx(0.09).epsilon(1e-12));
    for (double g : l.gradient.data()) CHECK(g == doctest::Approx(2 * 0.3 / 3).epsilon(1e-12));
  }

  TEST_CASE("losses vanish at the target and where alpha is zero") {
    Rng rng(1);
    const auto y = random_tensor(2, 6, 5, 3, rng, -4, 2);
    const auto alpha = random_tensor(2, 6, 5, 1, rng, 0, 1);
    for (auto mode : {LossMode::direct, LossMode::ir}) {
      LossConfig cfg;
      cfg.mode = mode;
      const auto l = hdr_loss(y, y, alpha, cfg);
      CHECK(l.value == 0.0);
      for (double g : l.gradient.data()) CHECK(g == 0.0);
    }
    const auto yhat = random_tensor(2, 6, 5, 3, rng, -4, 2);
    Tensor4<double> zero(2, 6, 5, 1);
    CHECK(direct_loss(yhat, y, zero).value == 0.0);
    CHECK(ir_loss(yhat, y, zero, 0.5, 2.0).value == 0.0);
  }

  TEST_CASE("gaussian kernel") {
    for (double s : {0.5, 1.0, 2.0, 3.3}) {
      const auto k = gaussian_kernel(s);
      CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * s)) + 1);
      CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == k[k.size() - 1 - i]);
    }
    CHECK(gaussian_kernel(0.0) == std::vector<double>{1.0});
  }

  TEST_CASE("blur preserves constants, impulses and symmetry") {
    Raster<double> c(9, 7, 1, 2.25);
    const auto bc = gaussian_blur(c, 2.0);
    for (double v : bc.data()) CHECK(v == doctest::Approx(2.25).epsilon(1e-14));

    Raster<double> impulse(31, 31, 1);
    impulse(15, 15, 0) = 1.0;
    const auto b = gaussian_blur(impulse, 2.0);
    double total = 0.0;
    for (double v : b.data()) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);

    Raster<double> sym(11, 5, 1);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 11; ++x) sym(x, y, 0) = std::abs(x - 5) * 0.3 + y;
    const auto bs = gaussian_blur(sym, 1.5);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 11; ++x) CHECK(bs(x, y, 0) == doctest::Approx(bs(10 - x, y, 0)).epsilon(1e-13));
  }

  TEST_CASE("blur adjoint satisfies the inner-product identity") {
    Rng rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    Raster<double> a(13, 6, 1), b(13, 6, 1);
    for (auto& v : a.data()) v = u(rng);
    for (auto& v : b.data()) v = u(rng);
    double lhs = 0.0, rhs = 0.0;
    const auto ba = gaussian_blur(a, 2.0);
    const auto atb = gaussian_blur_adjoint(b, 2.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      lhs += ba.data()[i] * b.data()[i];
      rhs += a.data()[i] * atb.data()[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
  }

  TEST_CASE("decomposition examples") {
    Tensor4<double> k(1, 5, 6, 3, -1.75);
    const auto d = decompose_ir(k, 2.0);
    for (double v : d.log_illuminance.data()) CHECK(v == doctest::Approx(-1.75).epsilon(1e-14));
    for (double v : d.log_reflectance.data()) CHECK(std::abs(v) < 1e-14);

    Tensor4<double> gray(1, 1, 1, 3, 0.6);
    CHECK(decompose_ir(gray, 0.0).log_illuminance[0] == doctest::Approx(0.6).epsilon(1e-15));

    Rng rng(3);
    const auto y = random_tensor(2, 6, 7, 3, rng, -5, 3);
    const auto r = decompose_ir(y, 1.0);
    for (std::size_t p = 0; p < y.pixels(); ++p)
      for (int c = 0; c < 3; ++c)
        CHECK(r.log_illuminance[p] + r.log_reflectance[p * 3 + c] == doctest::Approx(y[p * 3 + c]).epsilon(1e-14));
  }

  TEST_CASE("ir loss is affine in lambda") {
    Rng rng(4);
    const auto yhat = random_tensor(2, 8, 8, 3, rng, -3, 3);
    const auto y = random_tensor(2, 8, 8, 3, rng, -3, 3);
    const auto alpha = random_tensor(2, 8, 8, 1, rng, 0, 1);
    const double l1 = ir_loss(yhat, y, alpha, 1.0, 2.0).value;
    const double l0 = ir_loss(yhat, y, alpha, 0.0, 2.0).value;
    for (double lambda : {0.0, 0.25, 0.5, 0.9}) {
      const auto l = ir_loss(yhat, y, alpha, lambda, 2.0);
      CHECK(std::abs(l.value - (lambda * l1 + (1 - lambda) * l0)) <= 1e-12);
      CHECK(l.illuminance == doctest::Approx(l1).epsilon(1e-14));
      CHECK(l.reflectance == doctest::Approx(l0).epsilon(1e-14));
    }
  }

  TEST_CASE("loss gradients match finite differences") {
    Rng rng(5);
    const auto yhat = random_tensor(1, 8, 8, 3, rng, -3, 3);
    const auto y = random_tensor(1, 8, 8, 3, rng, -3, 3);
    const auto alpha = random_tensor(1, 8, 8, 1, rng, 0, 1);
    CHECK(max_rel_fd_error(yhat, [&](const auto& t) { return direct_loss(t, y, alpha); }) <= 1e-4);
    for (double lambda : {0.0, 0.5, 1.0})
      for (double sigma : {0.0, 1.0, 2.0}) {
        CAPTURE(lambda);
        CAPTURE(sigma);
        CHECK(max_rel_fd_error(yhat, [&](const auto& t) -> LossValue { return ir_loss(t, y, alpha, lambda, sigma); }) <=
              1e-4);
      }
  }

  TEST_CASE("masked pixels do not contribute") {
    Rng rng(6);
    auto yhat = random_tensor(1, 6, 6, 3, rng, -2, 2);
    const auto y = random_tensor(1, 6, 6, 3, rng, -2, 2);
    Tensor4<double> alpha(1, 6, 6, 1, 1.0);
    alpha(0, 2, 3, 0) = 0.0;
    const double before = direct_loss(yhat, y, alpha).value;
    const auto g = direct_loss(yhat, y, alpha).gradient;
    for (int c = 0; c < 3; ++c) {
      CHECK(g(0, 2, 3, c) == 0.0);
      yhat(0, 2, 3, c) += 10.0;
    }
    CHECK(direct_loss(yhat, y, alpha).value == before);
  }

  TEST_CASE("config parsing") {
    const auto cfg = LossConfig::from_key_values(KeyValues::parse("loss = ir\nlambda = 0.25\ngaussian_sigma = 0\n"));
    CHECK(cfg.mode == LossMode::ir);
    CHECK(cfg.lambda == 0.25);
    CHECK(cfg.sigma == 0.0);
    CHECK(cfg.tau == 0.95);
    const auto back = LossConfig::from_key_values(KeyValues::parse(cfg.to_text()));
    CHECK(back.mode == cfg.mode);
    CHECK(back.lambda == cfg.lambda);
    CHECK(loss_mode_named("direct") == LossMode::direct);
    CHECK(to_string(LossMode::ir) == "ir");
    CHECK_THROWS(loss_mode_named("l1"));
    CHECK_THROWS(LossConfig::from_key_values(KeyValues::parse("lambda = 1.5\n")));
    CHECK_THROWS(LossConfig::from_key_values(KeyValues::parse("tau = 1\n")));
  }

  TEST_CASE("log target and mask tensors") {
    Raster<float> r(2, 1, 3, 0.0f);
    r(1, 0, 2) = 3.0f;
    const auto t = log_target(ImageHDR(r), kLogEpsilon);
    CHECK(t(0, 0, 0, 0) == doctest::Approx(std::log(kLogEpsilon)));
    CHECK(t(0, 0, 1, 2) == doctest::Approx(std::log(3.0 + kLogEpsilon)));
    BlendMask m{2, 1, {0.0, 0.5}};
    CHECK(mask_tensor(m)(0, 0, 1, 0) == 0.5);
  }
}
