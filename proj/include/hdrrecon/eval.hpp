#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hdrrecon/camera.hpp"
#include "hdrrecon/loss.hpp"
#include "hdrrecon/network.hpp"
#include "hdrrecon/stats.hpp"

namespace hdrrecon {

struct EvalConfig {
  LossConfig loss;  // tau, epsilon, sigma and the I/R lambda
  double gamma = 2.0;

  void validate() const;
};

/// One row of an evaluation table. `ir` uses the configured lambda,
/// `illuminance` and `reflectance` are the lambda = 1 and lambda = 0 losses.
struct MseRow {
  std::string method;
  double direct = 0.0;
  double ir = 0.0;
  double illuminance = 0.0;
  double reflectance = 0.0;
};

/// What produces the log prediction for a test input.
struct Method {
  enum class Kind { reference, ground_truth, model };
  std::string name;
  Kind kind = Kind::reference;
  const Network<float>* net = nullptr;

  static Method reference() { return {"reference", Kind::reference, nullptr}; }
  static Method ground_truth() { return {"ground-truth", Kind::ground_truth, nullptr}; }
  static Method model(std::string name, const Network<float>& net) { return {std::move(name), Kind::model, &net}; }
};

struct MseReport {
  std::vector<MseRow> rows;
  std::size_t image_count = 0;
  std::string config;

  const MseRow& row(const std::string& method) const;
  std::string to_text() const;
  std::string to_tsv() const;
  /// One `key=value` line per row.
  std::string to_records() const;
};

/// Per-pixel log prediction yhat of `method` for `pair`.
Raster<double> method_log_prediction(const Method& method, const TrainingPair& pair, const EvalConfig& config);
/// Errors of `method` averaged over `pairs`.
MseRow evaluate(const Method& method, std::span<const TrainingPair> pairs, const EvalConfig& config);
MseReport mse_table(std::span<const Method> methods, std::span<const TrainingPair> pairs, const EvalConfig& config);

/// Synthetic test scenes exposed so that a fraction v of pixels clips, without noise.
std::vector<TrainingPair> make_test_pairs(int count, int size, double v, std::uint64_t seed);

struct SweepReport {
  std::string method;
  std::vector<double> fractions;
  std::vector<MseRow> rows;  // one per fraction

  std::string to_text() const;
  std::string to_tsv() const;
  std::string to_records() const;
};

/// Re-exposes every scene at each clipped fraction (strictly increasing, in [0,1))
/// and reports the mean errors against the rescaled scene.
SweepReport exposure_sweep(const Method& method, std::span<const ImageHDR> scenes, std::span<const double> fractions,
                           const EvalConfig& config);

enum class DatasetKind { ldr, hdr };

struct DatasetStats {
  DatasetKind kind = DatasetKind::ldr;
  std::size_t image_count = 0;
  std::size_t skipped = 0;
  std::vector<double> bin_edges;
  std::vector<double> mean_mass;  // per-image normalized histograms, averaged
  /// LDR: fraction of pixels whose max channel is the top code, per image.
  std::vector<double> top_mass;
  double mean_top_mass = 0.0;
  /// HDR: (stops above 1, mean fraction of pixels whose max channel reaches 2^stops).
  std::vector<std::pair<double, double>> tail;

  std::string to_text() const;
  std::string to_records() const;
};

/// 256 bins centred on the codes, over the per-pixel max channel.
DatasetStats ldr_stats(std::span<const ImageLDR> images);
/// log2 of the per-pixel max channel over [-12, 12] in 48 bins, plus the tail profile.
DatasetStats hdr_stats(std::span<const ImageHDR> images);
/// Reads every .png (ldr) or .hdr/.pfm (hdr) file in `dir`; unreadable files are counted in `skipped`.
DatasetStats dataset_stats(const std::filesystem::path& dir, DatasetKind kind);

/// Files in `dir` with one of `extensions` (lowercase, with dot), sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::initializer_list<const char*> extensions);

/// Pairs stored as `<stem>.png` + `<stem>.pfm` (or `.hdr`), with optional `<stem>.meta`.
std::vector<TrainingPair> load_pairs(const std::filesystem::path& dir);
void save_pair(const TrainingPair& pair, const std::filesystem::path& dir, const std::string& stem,
               const CropSpec* crop = nullptr);

}  // namespace hdrrecon
