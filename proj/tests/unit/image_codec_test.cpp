#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "hdrrecon/codec.hpp"
#include "hdrrecon/image.hpp"
#include "support.hpp"

using namespace hdrrecon;

TEST_SUITE("image") {
  TEST_CASE("raster indexing is interleaved row-major") {
    Raster<int> r(3, 2, 2);
    r(2, 1, 1) = 7;
    CHECK(r.data()[(1 * 3 + 2) * 2 + 1] == 7);
    CHECK(r.pixel_count() == 6);
    CHECK_THROWS_AS(Raster<int>(0, 2, 1), std::invalid_argument);
  }

  TEST_CASE("hdr images reject negative and non-finite values") {
    Raster<float> r(2, 2, 3, 1.0f);
    CHECK_NOTHROW(ImageHDR{r});
    r(1, 1, 2) = -0.5f;
    CHECK_THROWS_AS(ImageHDR{r}, std::invalid_argument);
    r(1, 1, 2) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(ImageHDR{r}, std::invalid_argument);
    CHECK_THROWS_AS(ImageHDR(Raster<float>(2, 2, 1)), std::invalid_argument);
  }

  TEST_CASE("ldr values sit on the 8-bit grid") {
    Raster<std::uint8_t> c(1, 1, 3);
    c(0, 0, 0) = 255;
    c(0, 0, 1) = 128;
    const ImageLDR img(c);
    CHECK(img(0, 0, 0) == 1.0f);
    CHECK(img(0, 0, 1) == doctest::Approx(128.0 / 255.0));
    CHECK(img(0, 0, 2) == 0.0f);
  }

  TEST_CASE("crop and flip") {
    Raster<int> r(4, 3, 1);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) r(x, y, 0) = 10 * y + x;
    const auto c = crop(r, 1, 1, 2, 2);
    CHECK(c(0, 0, 0) == 11);
    CHECK(c(1, 1, 0) == 22);
    CHECK_THROWS_AS(crop(r, 3, 0, 2, 1), std::out_of_range);
    const auto f = flip_horizontal(r);
    CHECK(f(0, 2, 0) == 23);
    CHECK(flip_horizontal(f) == r);
  }

  TEST_CASE("max channel") {
    Raster<float> r(1, 1, 3);
    r(0, 0, 0) = 0.2f;
    r(0, 0, 1) = 0.9f;
    r(0, 0, 2) = 0.4f;
    CHECK(max_channel(r)(0, 0, 0) == 0.9f);
  }
}

TEST_SUITE("codec") {
  TEST_CASE("rgbe pixel codec") {
    const auto one = encode_rgbe(1.0f, 1.0f, 1.0f);
    CHECK(one == std::array<std::uint8_t, 4>{128, 128, 128, 129});
    // (m + 0.5) / 256 * 2^(e - 128)
    const auto d = decode_rgbe({128, 128, 128, 129});
    CHECK(d[0] == 1.00390625f);
    CHECK(encode_rgbe(0.0f, 0.0f, 0.0f) == std::array<std::uint8_t, 4>{0, 0, 0, 0});
    CHECK(decode_rgbe({0, 0, 0, 0}) == std::array<float, 3>{0.0f, 0.0f, 0.0f});
    CHECK(decode_rgbe({12, 200, 3, 0}) == std::array<float, 3>{0.0f, 0.0f, 0.0f});
  }

  TEST_CASE("rgbe error stays within one mantissa step") {
    hdrrecon::Rng rng(4);
    std::lognormal_distribution<double> dist(0.0, 4.0);
    for (int i = 0; i < 2000; ++i) {
      const float r = static_cast<float>(dist(rng)), g = static_cast<float>(dist(rng)), b = static_cast<float>(dist(rng));
      const auto back = decode_rgbe(encode_rgbe(r, g, b));
      int e = 0;
      std::frexp(std::max({r, g, b}), &e);
      const double step = std::ldexp(1.0, e - 8);
      CHECK(std::abs(back[0] - r) <= step);
      CHECK(std::abs(back[1] - g) <= step);
      CHECK(std::abs(back[2] - b) <= step);
    }
  }

  TEST_CASE("format from extension") {
    CHECK(hdr_format_from_path("a/b.HDR") == HdrFormat::rgbe);
    CHECK(hdr_format_from_path("x.pfm") == HdrFormat::pfm);
    CHECK_THROWS_AS(hdr_format_from_path("x.exr"), std::invalid_argument);
  }

  TEST_CASE("pfm round trip is bit exact") {
    test::TempDir dir("pfm");
    Raster<float> r(5, 3, 3);
    float v = 0.0f;
    for (float& x : r.data()) {
      v += 0.37f;
      x = v * (v > 3 ? 1e6f : 1e-6f);
    }
    const ImageHDR img(r);
    write_hdr(img, dir / "a.pfm");
    CHECK(read_hdr(dir / "a.pfm") == img);
    const std::string bytes = test::read_file(dir / "a.pfm");
    CHECK(bytes.rfind("PF\n5 3\n-1", 0) == 0);
  }

  TEST_CASE("pfm rows are bottom-up and big-endian files decode") {
    test::TempDir dir("pfm_be");
    // 1x2 image, big endian: first stored row is the bottom one.
    std::string bytes = "PF\n1 2\n1.0\n";
    auto put_be = [&](float f) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<char>((u >> s) & 0xff));
    };
    for (float f : {1.0f, 2.0f, 3.0f}) put_be(f);  // bottom row
    for (float f : {4.0f, 5.0f, 6.0f}) put_be(f);  // top row
    test::write_file(dir / "be.pfm", bytes);
    const ImageHDR img = read_hdr(dir / "be.pfm");
    CHECK(img(0, 0, 0) == 4.0f);
    CHECK(img(0, 1, 2) == 3.0f);
  }

  TEST_CASE("malformed hdr files are rejected") {
    test::TempDir dir("bad");
    test::write_file(dir / "short.pfm", std::string("PF\n2 2\n-1.0\n") + std::string(10, '\0'));
    CHECK_THROWS_AS(read_hdr(dir / "short.pfm"), FormatError);
    test::write_file(dir / "gray.pfm", std::string("Pf\n1 1\n-1.0\n") + std::string(4, '\0'));
    CHECK_THROWS_AS(read_hdr(dir / "gray.pfm"), FormatError);
    test::write_file(dir / "nohdr.hdr", "hello");
    CHECK_THROWS_AS(read_hdr(dir / "nohdr.hdr"), FormatError);
    CHECK_THROWS(read_hdr(dir / "missing.hdr"));
  }

  TEST_CASE("rgbe files: flat round trip and run-length rejection") {
    test::TempDir dir("rgbe");
    Raster<float> r(9, 4, 3, 0.5f);
    r(3, 2, 1) = 40.0f;
    const ImageHDR img(r);
    write_hdr(img, dir / "a.hdr");
    const ImageHDR back = read_hdr(dir / "a.hdr");
    REQUIRE(back.width() == 9);
    CHECK(back(3, 2, 1) == doctest::Approx(40.0).epsilon(1.0 / 128));
    CHECK(back(0, 0, 0) == doctest::Approx(0.5).epsilon(1.0 / 128));

    // Replace the first scanline with a new-style run-length marker.
    std::string bytes = test::read_file(dir / "a.hdr");
    const auto data = bytes.size() - 9 * 4 * 4;
    bytes[data] = 2;
    bytes[data + 1] = 2;
    bytes[data + 2] = 0;
    bytes[data + 3] = 9;
    test::write_file(dir / "rle.hdr", bytes);
    CHECK_THROWS_AS(read_hdr(dir / "rle.hdr"), FormatError);

    std::string extra = test::read_file(dir / "a.hdr") + "xxxx";
    test::write_file(dir / "long.hdr", extra);
    CHECK_THROWS_AS(read_hdr(dir / "long.hdr"), FormatError);
  }

  TEST_CASE("png round trip is byte stable") {
    test::TempDir dir("png");
    hdrrecon::Rng rng(9);
    const ImageLDR img = test::random_ldr(17, 11, rng);
    write_ldr(img, dir / "a.png");
    const ImageLDR back = read_ldr(dir / "a.png");
    CHECK(back == img);
    write_ldr(back, dir / "b.png");
    CHECK(test::read_file(dir / "a.png") == test::read_file(dir / "b.png"));
    test::write_file(dir / "junk.png", "not a png");
    CHECK_THROWS_AS(read_ldr(dir / "junk.png"), FormatError);
  }
}
