#include "hdrrecon/camera.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hdrrecon/color.hpp"
#include "hdrrecon/config.hpp"
#include "hdrrecon/resample.hpp"
#include "hdrrecon/stats.hpp"

namespace hdrrecon {

void CameraParams::validate() const {
  if (!(n > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("camera curve needs n > 0 and sigma > 0");
  if (!(clip_fraction >= 0.0 && clip_fraction <= 1.0)) throw std::invalid_argument("clip fraction outside [0,1]");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
}

void AugmentConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("augment config: ") + what); };
  if (!(per_megapixel > 0.0)) fail("per_megapixel must be positive");
  if (!(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0)) fail("crop range must satisfy 0 < min <= max <= 1");
  if (target_size < 1) fail("target size must be positive");
  if (!(v_min > 0.0 && v_min <= v_max && v_max < 1.0)) fail("clip fraction range must satisfy 0 < min <= max < 1");
  if (!(n_std >= 0.0 && sigma_std >= 0.0 && hue_std >= 0.0 && sat_std >= 0.0)) fail("negative std");
  if (!(n_mean > kCurveParamFloor && sigma_mean > kCurveParamFloor)) fail("curve means must exceed the floor");
  if (!(noise_max >= 0.0)) fail("noise_max must be nonnegative");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) fail("flip probability outside [0,1]");
}

namespace {

double draw_above_floor(Rng& rng, double mean, double std) {
  std::normal_distribution<double> dist(mean, std);
  for (;;) {
    const double v = dist(rng);
    if (v > kCurveParamFloor) return v;
  }
}

}  // namespace

CameraParams sample_camera(const AugmentConfig& config, Rng& rng) {
  config.validate();
  CameraParams cam;
  cam.n = draw_above_floor(rng, config.n_mean, config.n_std);
  cam.sigma = draw_above_floor(rng, config.sigma_mean, config.sigma_std);
  cam.clip_fraction = std::uniform_real_distribution<double>(config.v_min, config.v_max)(rng);
  cam.hue_shift = std::normal_distribution<double>(0.0, config.hue_std)(rng);
  cam.sat_shift = std::normal_distribution<double>(0.0, config.sat_std)(rng);
  cam.noise_sigma = std::uniform_real_distribution<double>(0.0, config.noise_max)(rng);
  cam.flip = std::bernoulli_distribution(config.flip_prob)(rng);
  return cam;
}

std::vector<CropSpec> sample_crops(int width, int height, const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be positive");
  const int side = std::min(width, height);
  const int lo = static_cast<int>(std::ceil(config.crop_min * side));
  const int hi = static_cast<int>(std::floor(config.crop_max * side));
  if (lo < 1 || hi < lo) throw std::invalid_argument("image too small for any valid crop");

  const double megapixels = static_cast<double>(width) * height / 1e6;
  const long count = std::lround(config.per_megapixel * megapixels);
  std::vector<CropSpec> crops;
  crops.reserve(static_cast<std::size_t>(std::max(0L, count)));
  for (long k = 0; k < count; ++k) {
    CropSpec c;
    c.size = std::uniform_int_distribution<int>(lo, hi)(rng);
    c.x = std::uniform_int_distribution<int>(0, width - c.size)(rng);
    c.y = std::uniform_int_distribution<int>(0, height - c.size)(rng);
    c.target = config.target_size;
    crops.push_back(c);
  }
  return crops;
}

double exposure_scale(const Raster<float>& image, double v) {
  if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("clip fraction must lie in [0,1)");
  const auto peaks = max_channel(image);
  const double threshold = quantile(peaks.data(), 1.0 - v);
  if (!(threshold > 0.0)) throw std::invalid_argument("exposure undefined for an all-zero image");
  return 1.0 / threshold;
}

double exposure_scale(const ImageHDR& image, double v) { return exposure_scale(image.raster(), v); }

double camera_curve(double x, double n, double sigma) {
  x = std::clamp(x, 0.0, 1.0);
  if (x == 0.0) return 0.0;
  const double xn = std::pow(x, n);
  return (1.0 + sigma) * xn / (xn + sigma);
}

double inverse_camera_curve(double y, double n, double sigma) {
  y = std::clamp(y, 0.0, 1.0);
  if (y == 0.0) return 0.0;
  if (y == 1.0) return 1.0;
  return std::pow(sigma * y / (1.0 + sigma - y), 1.0 / n);
}

std::uint8_t quantize_code(double x) {
  const double code = std::floor(255.0 * std::min(1.0, x) + 0.5);
  return static_cast<std::uint8_t>(std::clamp(code, 0.0, 255.0));
}

ImageLDR clip_quantize(const Raster<float>& image) {
  if (image.channels() != 3) throw std::invalid_argument("clip_quantize needs 3 channels");
  Raster<std::uint8_t> codes(image.width(), image.height(), 3);
  auto src = image.data();
  auto dst = codes.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = quantize_code(src[i]);
  return ImageLDR(std::move(codes));
}

namespace {

Raster<float> scale_raster(const Raster<float>& in, double s) {
  Raster<float> out(in.width(), in.height(), in.channels());
  auto src = in.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i] * s);
  return out;
}

ImageLDR expose_to_display(const Raster<float>& linear, double n, double sigma, double noise_sigma,
                           std::uint64_t noise_seed) {
  Raster<float> display(linear.width(), linear.height(), 3);
  auto src = linear.data();
  auto dst = display.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(camera_curve(std::min(1.0, static_cast<double>(src[i])), n, sigma));
  }
  if (noise_sigma > 0.0) {
    Rng rng(noise_seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (float& v : dst) v = static_cast<float>(v + noise(rng));
  }
  return clip_quantize(display);
}

}  // namespace

TrainingPair augment(const ImageHDR& scene, const CropSpec& crop, const CameraParams& cam,
                     std::uint64_t noise_seed) {
  cam.validate();
  if (crop.target < 1) throw std::invalid_argument("crop target must be positive");
  Raster<float> img = hdrrecon::crop(scene.raster(), crop.x, crop.y, crop.size, crop.size);
  img = resample_bilinear(img, crop.target, crop.target);
  if (cam.flip) img = flip_horizontal(img);
  if (cam.hue_shift != 0.0 || cam.sat_shift != 0.0) img = shift_hue_saturation(img, cam.hue_shift, cam.sat_shift);
  const double s = exposure_scale(img, cam.clip_fraction);
  Raster<float> linear = scale_raster(img, s);
  ImageLDR input = expose_to_display(linear, cam.n, cam.sigma, cam.noise_sigma, noise_seed);
  return {std::move(input), ImageHDR(std::move(linear)), cam};
}

std::vector<TrainingPair> augment_scene(const ImageHDR& scene, const AugmentConfig& config,
                                        std::uint64_t scene_index) {
  Rng crop_rng(derive_seed(config.seed, {scene_index}));
  const auto crops = sample_crops(scene.width(), scene.height(), config, crop_rng);
  std::vector<TrainingPair> pairs;
  pairs.reserve(crops.size());
  for (std::size_t k = 0; k < crops.size(); ++k) {
    Rng cam_rng(derive_seed(config.seed, {scene_index, k, 0}));
    const CameraParams cam = sample_camera(config, cam_rng);
    pairs.push_back(augment(scene, crops[k], cam, derive_seed(config.seed, {scene_index, k, 1})));
  }
  return pairs;
}

TrainingPair capture(const ImageHDR& scene, double v, double n, double sigma) {
  CameraParams cam;
  cam.n = n;
  cam.sigma = sigma;
  cam.clip_fraction = v;
  cam.validate();
  const double s = exposure_scale(scene, v);
  Raster<float> linear = scale_raster(scene.raster(), s);
  ImageLDR input = expose_to_display(linear, n, sigma, 0.0, 0);
  return {std::move(input), ImageHDR(std::move(linear)), cam};
}

bool filter_unsaturated(const ImageLDR& image, double xi) {
  const auto& codes = image.codes();
  std::size_t saturated = 0;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (codes(x, y, 0) == 255 || codes(x, y, 1) == 255 || codes(x, y, 2) == 255) ++saturated;
  return static_cast<double>(saturated) / static_cast<double>(codes.pixel_count()) < xi;
}

ImageHDR simulate_hdr(const ImageLDR& image, double s, double n, double sigma) {
  if (!(s > 0.0)) throw std::invalid_argument("exposure scale must be positive");
  // One table per code keeps the per-pixel work to a lookup.
  float table[256];
  for (int k = 0; k < 256; ++k) table[k] = static_cast<float>(s * inverse_camera_curve(k / 255.0, n, sigma));
  Raster<float> out(image.width(), image.height(), 3);
  auto src = image.codes().data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = table[src[i]];
  return ImageHDR(std::move(out));
}

std::string format_camera_meta(const CameraParams& cam, const CropSpec* crop) {
  std::ostringstream os;
  os << "n = " << format_double(cam.n) << "\n"
     << "sigma = " << format_double(cam.sigma) << "\n"
     << "clip_fraction = " << format_double(cam.clip_fraction) << "\n"
     << "hue_shift = " << format_double(cam.hue_shift) << "\n"
     << "sat_shift = " << format_double(cam.sat_shift) << "\n"
     << "noise_sigma = " << format_double(cam.noise_sigma) << "\n"
     << "flip = " << (cam.flip ? 1 : 0) << "\n";
  if (crop) {
    os << "crop_x = " << crop->x << "\n"
       << "crop_y = " << crop->y << "\n"
       << "crop_size = " << crop->size << "\n"
       << "crop_target = " << crop->target << "\n";
  }
  return os.str();
}

std::pair<CameraParams, CropSpec> parse_camera_meta(const std::string& text) {
  const auto kv = KeyValues::parse(text);
  CameraParams cam;
  cam.n = kv.get_double("n");
  cam.sigma = kv.get_double("sigma");
  cam.clip_fraction = kv.get_double("clip_fraction");
  cam.hue_shift = kv.get_double("hue_shift");
  cam.sat_shift = kv.get_double("sat_shift");
  cam.noise_sigma = kv.get_double("noise_sigma");
  cam.flip = kv.get_bool_or("flip", false);
  cam.validate();
  CropSpec crop;
  crop.x = static_cast<int>(kv.get_int_or("crop_x", 0));
  crop.y = static_cast<int>(kv.get_int_or("crop_y", 0));
  crop.size = static_cast<int>(kv.get_int_or("crop_size", 1));
  crop.target = static_cast<int>(kv.get_int_or("crop_target", 0));
  return {cam, crop};
}

}  // namespace hdrrecon
