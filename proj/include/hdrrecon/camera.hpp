#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hdrrecon/image.hpp"
#include "hdrrecon/rng.hpp"

namespace hdrrecon {

/// One virtual camera calibration.
struct CameraParams {
  double n = 0.9;              // sigmoid exponent
  double sigma = 0.6;          // sigmoid offset
  double clip_fraction = 0.1;  // target fraction of clipped pixels
  double hue_shift = 0.0;      // degrees
  double sat_shift = 0.0;
  double noise_sigma = 0.0;    // display-value units
  bool flip = false;

  void validate() const;
  bool operator==(const CameraParams&) const = default;
};

/// Square crop [x, x+size) x [y, y+size), resampled to target x target.
struct CropSpec {
  int x = 0;
  int y = 0;
  int size = 1;
  int target = 320;

  bool operator==(const CropSpec&) const = default;
};

struct AugmentConfig {
  double per_megapixel = 10.0;
  double crop_min = 0.20;
  double crop_max = 0.60;
  int target_size = 320;
  double v_min = 0.05;
  double v_max = 0.15;
  double n_mean = 0.9;
  double n_std = 0.1;
  double sigma_mean = 0.6;
  double sigma_std = 0.1;
  double hue_std = 7.0;  // degrees
  double sat_std = 0.1;
  double noise_max = 0.01;
  double flip_prob = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Threshold on the fraction of max-code pixels for the unsaturated subset.
inline constexpr double kDefaultSaturationThreshold = 50.0 / (256.0 * 256.0);

/// Normal draws for n and sigma are redrawn until they exceed this floor.
inline constexpr double kCurveParamFloor = 0.05;

struct TrainingPair {
  ImageLDR input;
  ImageHDR target;  // linear, pre-clipping; values may exceed 1
  CameraParams params;
};

CameraParams sample_camera(const AugmentConfig& config, Rng& rng);

/// round(N * megapixels) square crops with side uniform in
/// [crop_min, crop_max] * min(width, height) and uniform position.
std::vector<CropSpec> sample_crops(int width, int height, const AugmentConfig& config, Rng& rng);

/// s = 1 / H_th with H_th the (1 - v) quantile of the per-pixel max channel.
double exposure_scale(const ImageHDR& image, double v);
double exposure_scale(const Raster<float>& image, double v);

/// f(x) = (1 + sigma) x^n / (x^n + sigma), x clipped to [0, 1].
double camera_curve(double x, double n, double sigma);
/// Closed-form inverse (sigma y / (1 + sigma - y))^(1/n), y clipped to [0, 1].
double inverse_camera_curve(double y, double n, double sigma);

/// Rounds to the nearest 8-bit code after clipping to [0, 1].
std::uint8_t quantize_code(double x);
ImageLDR clip_quantize(const Raster<float>& image);

/// Crop, resample, flip, hue/saturation shift, exposure, camera curve,
/// display-domain noise, quantization. `noise_seed` drives the only random step.
TrainingPair augment(const ImageHDR& scene, const CropSpec& crop, const CameraParams& cam,
                     std::uint64_t noise_seed);

/// All crops of one scene, each with its own camera and noise stream derived
/// from (config.seed, scene_index, crop index).
std::vector<TrainingPair> augment_scene(const ImageHDR& scene, const AugmentConfig& config,
                                        std::uint64_t scene_index);

/// Test-time capture: expose so a fraction v clips, apply the camera curve and quantize.
TrainingPair capture(const ImageHDR& scene, double v, double n = 0.9, double sigma = 0.6);

/// True iff the fraction of pixels whose max channel is at the top code is strictly below xi.
bool filter_unsaturated(const ImageLDR& image, double xi = kDefaultSaturationThreshold);

/// H = s * f^-1(D) channel-wise.
ImageHDR simulate_hdr(const ImageLDR& image, double s, double n, double sigma);

/// Line-oriented `key = value` record of the parameters and its parser.
std::string format_camera_meta(const CameraParams& cam, const CropSpec* crop = nullptr);
std::pair<CameraParams, CropSpec> parse_camera_meta(const std::string& text);

}  // namespace hdrrecon
