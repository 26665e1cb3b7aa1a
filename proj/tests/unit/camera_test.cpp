#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hdrrecon/camera.hpp"
#include "hdrrecon/resample.hpp"
#include "hdrrecon/synthetic.hpp"

using namespace hdrrecon;

namespace {

ImageHDR ramp_100() {
  Raster<float> r(10, 10, 3);
  for (int i = 0; i < 100; ++i) {
    const float v = static_cast<float>((i + 1) / 100.0);
    r(i % 10, i / 10, 0) = v;
    r(i % 10, i / 10, 1) = v * 0.5f;
    r(i % 10, i / 10, 2) = v * 0.25f;
  }
  return ImageHDR(std::move(r));
}

ImageLDR with_saturated(int count) {
  Raster<std::uint8_t> c(256, 256, 3, 40);
  for (int i = 0; i < count; ++i) c(i % 256, i / 256, 1) = 255;
  return ImageLDR(std::move(c));
}

}  // namespace

TEST_SUITE("camera") {
  TEST_CASE("camera curve endpoints and reference value") {
    for (double n : {0.5, 0.9, 1.7})
      for (double s : {0.1, 0.6, 2.0}) {
        CHECK(camera_curve(0.0, n, s) == 0.0);
        CHECK(camera_curve(1.0, n, s) == doctest::Approx(1.0).epsilon(1e-15));
      }
    // Extended-precision evaluation of (1 + s) x^n / (x^n + s).
    CHECK(camera_curve(0.5, 0.9, 0.6) == doctest::Approx(0.7548453084505882).epsilon(1e-14));
    CHECK(camera_curve(1.7, 0.9, 0.6) == camera_curve(1.0, 0.9, 0.6));
  }

  TEST_CASE("inverse curve") {
    CHECK(inverse_camera_curve(0.0, 0.9, 0.6) == 0.0);
    CHECK(inverse_camera_curve(1.0, 0.9, 0.6) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(inverse_camera_curve(0.75485, 0.9, 0.6) == doctest::Approx(0.5000065369).epsilon(1e-9));
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = i / 1000.0;
      worst = std::max(worst, std::abs(inverse_camera_curve(camera_curve(x, 0.9, 0.6), 0.9, 0.6) - x));
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("curve is strictly increasing") {
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double y = camera_curve(i / 1000.0, 0.65, 0.3);
      CHECK(y > prev);
      prev = y;
    }
  }

  TEST_CASE("clip and quantize") {
    CHECK(quantize_code(0.5) == 128);
    CHECK(quantize_code(1.7) == 255);
    CHECK(quantize_code(-0.2) == 0);
    Raster<float> r(2, 1, 3);
    r(0, 0, 0) = 0.5f;
    r(1, 0, 2) = 1.7f;
    const ImageLDR q = clip_quantize(r);
    CHECK(q(0, 0, 0) == doctest::Approx(128.0 / 255.0));
    CHECK(q(1, 0, 2) == 1.0f);
    CHECK(clip_quantize(q.to_float()) == q);
  }

  TEST_CASE("exposure scale on an explicit value list") {
    const ImageHDR img = ramp_100();
    // Interpolated 0.95 quantile of {0.01, ..., 1.00}: position 94.05, so 0.9505.
    const double s = exposure_scale(img, 0.05);
    CHECK(s == doctest::Approx(1.052077853761178).epsilon(1e-7));
    int clipped = 0;
    const auto peaks = max_channel(img.raster());
    for (float v : peaks.data())
      if (v * s >= 1.0) ++clipped;
    CHECK(clipped == 5);
  }

  TEST_CASE("exposure scale degenerate cases") {
    Raster<float> c(4, 4, 3, 0.25f);
    CHECK(exposure_scale(ImageHDR(c), 0.3) == 4.0);
    const ImageHDR img = ramp_100();
    CHECK(exposure_scale(img, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(exposure_scale(ImageHDR(4, 4), 0.1), std::invalid_argument);
    CHECK_THROWS_AS(exposure_scale(img, 1.0), std::invalid_argument);
  }

  TEST_CASE("sample_camera is deterministic with the configured moments") {
    AugmentConfig cfg;
    Rng a(42), b(42);
    CHECK(sample_camera(cfg, a) == sample_camera(cfg, b));

    Rng rng(7);
    double n = 0, s = 0, flips = 0, v_lo = 1, v_hi = 0, noise_hi = 0;
    const int count = 10000;
    for (int i = 0; i < count; ++i) {
      const auto cam = sample_camera(cfg, rng);
      n += cam.n;
      s += cam.sigma;
      flips += cam.flip;
      v_lo = std::min(v_lo, cam.clip_fraction);
      v_hi = std::max(v_hi, cam.clip_fraction);
      noise_hi = std::max(noise_hi, cam.noise_sigma);
      CHECK(cam.n > kCurveParamFloor);
      CHECK(cam.sigma > kCurveParamFloor);
    }
    CHECK(std::abs(n / count - 0.9) < 0.01);
    CHECK(std::abs(s / count - 0.6) < 0.01);
    CHECK(std::abs(flips / count - 0.5) < 0.02);
    CHECK(v_lo >= 0.05);
    CHECK(v_hi <= 0.15);
    CHECK(noise_hi <= 0.01);
  }

  TEST_CASE("crop count, bounds and side range") {
    AugmentConfig cfg;
    Rng rng(3);
    CHECK(sample_crops(1024, 1024, cfg, rng).size() == 10);

    for (const auto& c : sample_crops(2000, 1000, cfg, rng)) {
      CHECK(c.size >= 200);
      CHECK(c.size <= 600);
      CHECK(c.target == cfg.target_size);
    }

    cfg.per_megapixel = 1e5;  // about 10^5 crops on a 1000 x 1000 image
    const auto crops = sample_crops(1000, 1000, cfg, rng);
    CHECK(crops.size() == 100000);
    bool inside = true;
    for (const auto& c : crops) inside = inside && c.x >= 0 && c.y >= 0 && c.x + c.size <= 1000 && c.y + c.size <= 1000;
    CHECK(inside);

    CHECK_THROWS_AS(sample_crops(1, 1, AugmentConfig{}, rng), std::invalid_argument);
  }

  TEST_CASE("augment without perturbations reduces to exposure scaling") {
    const ImageHDR scene = synthetic_scene(96, 80, 5);
    CameraParams cam;
    cam.clip_fraction = 0.1;
    const CropSpec crop{10, 4, 64, 48};
    const auto pair = augment(scene, crop, cam, 99);
    const Raster<float> resampled = resample_bilinear(hdrrecon::crop(scene.raster(), 10, 4, 64, 64), 48, 48);
    const double s = exposure_scale(resampled, 0.1);
    bool exact = true;
    for (std::size_t i = 0; i < resampled.size(); ++i)
      exact = exact && pair.target.data()[i] == static_cast<float>(resampled.data()[i] * s);
    CHECK(exact);
    CHECK(pair.input.width() == 48);
    CHECK(pair.params == cam);
  }

  TEST_CASE("augment clipped fraction tracks v") {
    const ImageHDR scene = synthetic_scene(128, 128, 21);
    CameraParams cam;
    cam.clip_fraction = 0.1;
    const auto pair = augment(scene, CropSpec{0, 0, 128, 128}, cam, 0);
    const auto& codes = pair.input.codes();
    int clipped = 0;
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x)
        if (codes(x, y, 0) == 255 || codes(x, y, 1) == 255 || codes(x, y, 2) == 255) ++clipped;
    CHECK(std::abs(clipped / (128.0 * 128.0) - 0.1) <= 0.005);
  }

  TEST_CASE("augment_scene is deterministic") {
    const ImageHDR scene = synthetic_scene(200, 200, 8);
    AugmentConfig cfg;
    cfg.per_megapixel = 100;
    cfg.target_size = 32;
    cfg.seed = 17;
    const auto a = augment_scene(scene, cfg, 3);
    const auto b = augment_scene(scene, cfg, 3);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].input == b[i].input);
      CHECK(a[i].target == b[i].target);
      CHECK(a[i].params == b[i].params);
    }
    CHECK_FALSE(augment_scene(scene, cfg, 4)[0].input == a[0].input);
  }

  TEST_CASE("saturation filter uses a strict threshold") {
    CHECK(filter_unsaturated(with_saturated(49)));
    CHECK_FALSE(filter_unsaturated(with_saturated(50)));
    CHECK(filter_unsaturated(ImageLDR(256, 256)));
  }

  TEST_CASE("simulated hdr inverts the curve") {
    Raster<std::uint8_t> ones(3, 2, 3, 255);
    const ImageHDR four = simulate_hdr(ImageLDR(ones), 4.0, 0.9, 0.6);
    for (float v : four.data()) CHECK(v == doctest::Approx(4.0));

    // Code 192 is 0.75294..., close to f(0.5).
    Raster<std::uint8_t> mid(1, 1, 3, 192);
    const double expect = 2.0 * inverse_camera_curve(192 / 255.0, 0.9, 0.6);
    CHECK(simulate_hdr(ImageLDR(mid), 2.0, 0.9, 0.6)(0, 0, 0) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(2.0 * inverse_camera_curve(0.75485, 0.9, 0.6) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK_THROWS_AS(simulate_hdr(ImageLDR(mid), 0.0, 0.9, 0.6), std::invalid_argument);
  }

  TEST_CASE("meta record round trip") {
    CameraParams cam;
    cam.n = 0.8123456789;
    cam.sigma = 0.55;
    cam.clip_fraction = 0.07;
    cam.hue_shift = -3.25;
    cam.sat_shift = 0.01;
    cam.noise_sigma = 0.004;
    cam.flip = true;
    const CropSpec crop{5, 6, 70, 32};
    const auto [cam2, crop2] = parse_camera_meta(format_camera_meta(cam, &crop));
    CHECK(cam2 == cam);
    CHECK(crop2 == crop);
    CHECK_THROWS(parse_camera_meta("n = 0.9\n"));
  }
}
