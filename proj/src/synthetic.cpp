#include "hdrrecon/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "hdrrecon/rng.hpp"

namespace hdrrecon {

namespace {

struct Wave {
  double fx, fy, phase, amp;
};

struct Emitter {
  double cx, cy, radius, peak;
  std::array<double, 3> color;
  bool disc;  // flat-topped disc vs Gaussian falloff
};

std::array<double, 3> random_tint(Rng& rng, double spread) {
  std::uniform_real_distribution<double> u(1.0 - spread, 1.0 + spread);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

ImageHDR synthetic_scene(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  // Low and mid frequency log-luminance field.
  std::vector<Wave> waves;
  for (int k = 0; k < 7; ++k) {
    const double freq = k < 3 ? 0.5 + 1.5 * unit(rng) : 3.0 + 9.0 * unit(rng);
    const double angle = two_pi * unit(rng);
    const double amp = k < 3 ? 0.5 + 0.5 * unit(rng) : 0.10 + 0.25 * unit(rng);
    waves.push_back({freq * std::cos(angle), freq * std::sin(angle), two_pi * unit(rng), amp});
  }
  // Two surface tints blended along a slanted boundary.
  const auto tint_a = random_tint(rng, 0.35);
  const auto tint_b = random_tint(rng, 0.35);
  const double edge_angle = two_pi * unit(rng);
  const double edge_offset = 0.3 * (unit(rng) - 0.5);
  const double base = std::log(0.15 + 0.25 * unit(rng));
  const double sky_height = 0.15 + 0.25 * unit(rng);
  const double sky_level = 0.8 + 1.2 * unit(rng);
  const auto sky_tint = std::array<double, 3>{0.75 + 0.1 * unit(rng), 0.9, 1.1 + 0.2 * unit(rng)};

  std::vector<Emitter> emitters;
  const int n_lights = 2 + static_cast<int>(unit(rng) * 4);
  for (int k = 0; k < n_lights; ++k) {
    Emitter e;
    e.cx = unit(rng);
    e.cy = unit(rng);
    e.radius = 0.03 + 0.07 * unit(rng);
    e.peak = std::exp(std::log(3.0) + unit(rng) * (std::log(60.0) - std::log(3.0)));
    e.color = random_tint(rng, 0.3);
    e.disc = unit(rng) < 0.4;
    emitters.push_back(e);
  }
  const int n_spots = 4 + static_cast<int>(unit(rng) * 8);
  for (int k = 0; k < n_spots; ++k) {
    Emitter e;
    e.cx = unit(rng);
    e.cy = unit(rng);
    e.radius = 0.005 + 0.01 * unit(rng);
    e.peak = 2.0 + 10.0 * unit(rng);
    e.color = {1.0, 1.0, 1.0};
    e.disc = false;
    emitters.push_back(e);
  }

  const double aspect = static_cast<double>(width) / height;
  Raster<float> px(width, height, 3);
  for (int y = 0; y < height; ++y) {
    const double v = (y + 0.5) / height;
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width;
      double logl = base;
      for (const auto& w : waves) logl += w.amp * std::sin(two_pi * (w.fx * u * aspect + w.fy * v) + w.phase);
      const double side = std::cos(edge_angle) * (u - 0.5) + std::sin(edge_angle) * (v - 0.5) - edge_offset;
      const double mix = 1.0 / (1.0 + std::exp(-side * 40.0));
      std::array<double, 3> rgb;
      const double lum = std::exp(logl);
      for (int c = 0; c < 3; ++c) rgb[c] = lum * (tint_a[c] * (1.0 - mix) + tint_b[c] * mix);

      if (v < sky_height) {
        const double t = 1.0 - v / sky_height;
        const double sky = sky_level * (0.6 + 0.4 * t);
        const double blend = std::min(1.0, t * 3.0);
        for (int c = 0; c < 3; ++c) rgb[c] = rgb[c] * (1.0 - blend) + sky * sky_tint[c] * blend;
      }

      for (const auto& e : emitters) {
        const double dx = (u - e.cx) * aspect;
        const double dy = v - e.cy;
        const double r2 = (dx * dx + dy * dy) / (e.radius * e.radius);
        double g;
        if (e.disc) {
          g = r2 < 1.0 ? 1.0 : std::exp(-(std::sqrt(r2) - 1.0) * 6.0);
        } else {
          g = std::exp(-0.5 * r2 * 4.0);
        }
        if (g < 1e-6) continue;
        for (int c = 0; c < 3; ++c) rgb[c] += e.peak * e.color[c] * g;
      }
      for (int c = 0; c < 3; ++c) px(x, y, c) = static_cast<float>(std::max(0.0, rgb[c]));
    }
  }
  return ImageHDR(std::move(px));
}

}  // namespace hdrrecon
