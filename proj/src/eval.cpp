#include "hdrrecon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hdrrecon/codec.hpp"
#include "hdrrecon/reconstruct.hpp"
#include "hdrrecon/synthetic.hpp"

namespace hdrrecon {
namespace {

Tensor4<double> as_tensor(const Raster<double>& r) {
  Tensor4<double> t(1, r.height(), r.width(), r.channels());
  std::copy(r.data().begin(), r.data().end(), t.raw());
  return t;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string row_record(const std::string& prefix, const MseRow& r) {
  return prefix + " method=" + r.method + " direct=" + format_double(r.direct) + " ir=" + format_double(r.ir) +
         " i=" + format_double(r.illuminance) + " r=" + format_double(r.reflectance) + "\n";
}

std::string table(const std::string& first_header, const std::vector<std::string>& labels,
                  const std::vector<MseRow>& rows) {
  std::size_t width = first_header.size();
  for (const auto& l : labels) width = std::max(width, l.size());
  std::ostringstream os;
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };
  os << pad(first_header) << "      Direct         I/R           I           R\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << pad(labels[i]);
    for (double v : {rows[i].direct, rows[i].ir, rows[i].illuminance, rows[i].reflectance}) {
      const std::string s = fixed(v);
      os << std::string(12 - std::min<std::size_t>(12, s.size()), ' ') << s;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

void EvalConfig::validate() const {
  loss.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
}

const MseRow& MseReport::row(const std::string& method) const {
  for (const auto& r : rows)
    if (r.method == method) return r;
  throw std::out_of_range("no report row for '" + method + "'");
}

std::string MseReport::to_text() const {
  std::vector<std::string> labels;
  for (const auto& r : rows) labels.push_back(r.method);
  return table("method", labels, rows) + "images: " + std::to_string(image_count) + "\n";
}

std::string MseReport::to_tsv() const {
  std::string out = "method\tdirect\tir\ti\tr\n";
  for (const auto& r : rows) {
    out += r.method + "\t" + format_double(r.direct) + "\t" + format_double(r.ir) + "\t" +
           format_double(r.illuminance) + "\t" + format_double(r.reflectance) + "\n";
  }
  return out;
}

std::string MseReport::to_records() const {
  std::string out;
  for (const auto& r : rows) out += row_record("mse", r);
  return out + "mse_images=" + std::to_string(image_count) + "\n";
}

Raster<double> method_log_prediction(const Method& method, const TrainingPair& pair, const EvalConfig& config) {
  const int w = pair.input.width(), h = pair.input.height();
  Raster<double> out(w, h, 3);
  switch (method.kind) {
    case Method::Kind::ground_truth:
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) out(x, y, c) = std::log(static_cast<double>(pair.target(x, y, c)) + config.loss.epsilon);
      return out;
    case Method::Kind::reference:
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) {
            const double d = pair.input.code(x, y, c) / 255.0;
            out(x, y, c) = std::log(std::pow(d, config.gamma) + config.loss.epsilon);
          }
      return out;
    case Method::Kind::model:
      if (!method.net) throw std::invalid_argument("model method '" + method.name + "' has no network");
      return predict_log(*method.net, pair.input);
  }
  throw std::logic_error("unhandled method kind");
}

MseRow evaluate(const Method& method, std::span<const TrainingPair> pairs, const EvalConfig& config) {
  config.validate();
  if (pairs.empty()) throw std::invalid_argument("evaluation set is empty");
  MseRow row{method.name};
  for (const auto& pair : pairs) {
    if (pair.target.width() != pair.input.width() || pair.target.height() != pair.input.height()) {
      throw std::invalid_argument("ground truth does not match the input size");
    }
    const Tensor4<double> yhat = as_tensor(method_log_prediction(method, pair, config));
    const Tensor4<double> y = log_target(pair.target, config.loss.epsilon);
    const Tensor4<double> alpha = mask_tensor(blend_mask(pair.input, config.loss.tau));
    row.direct += direct_loss(yhat, y, alpha).value;
    const IrLossValue ir = ir_loss(yhat, y, alpha, config.loss.lambda, config.loss.sigma);
    row.ir += ir.value;
    row.illuminance += ir.illuminance;
    row.reflectance += ir.reflectance;
  }
  const double n = static_cast<double>(pairs.size());
  row.direct /= n;
  row.ir /= n;
  row.illuminance /= n;
  row.reflectance /= n;
  return row;
}

MseReport mse_table(std::span<const Method> methods, std::span<const TrainingPair> pairs, const EvalConfig& config) {
  MseReport report;
  report.image_count = pairs.size();
  report.config = config.loss.to_text() + "gamma = " + format_double(config.gamma) + "\n";
  for (const auto& m : methods) report.rows.push_back(evaluate(m, pairs, config));
  return report;
}

std::vector<TrainingPair> make_test_pairs(int count, int size, double v, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("test set needs at least one image");
  std::vector<TrainingPair> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(capture(synthetic_scene(size, size, derive_seed(seed, {0x7465u, static_cast<std::uint64_t>(i)})), v));
  }
  return out;
}

std::string SweepReport::to_text() const {
  std::vector<std::string> labels;
  for (double f : fractions) labels.push_back(fixed(100.0 * f, 2) + "%");
  return "method: " + method + "\n" + table("clipped", labels, rows);
}

std::string SweepReport::to_tsv() const {
  std::string out = "fraction\tdirect\tir\ti\tr\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += format_double(fractions[i]) + "\t" + format_double(rows[i].direct) + "\t" + format_double(rows[i].ir) +
           "\t" + format_double(rows[i].illuminance) + "\t" + format_double(rows[i].reflectance) + "\n";
  }
  return out;
}

std::string SweepReport::to_records() const {
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) out += row_record("sweep fraction=" + format_double(fractions[i]), rows[i]);
  return out;
}

SweepReport exposure_sweep(const Method& method, std::span<const ImageHDR> scenes, std::span<const double> fractions,
                           const EvalConfig& config) {
  if (scenes.empty()) throw std::invalid_argument("sweep needs at least one scene");
  if (fractions.empty()) throw std::invalid_argument("sweep needs at least one fraction");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] < 1.0)) throw std::invalid_argument("fractions must lie in [0,1)");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) throw std::invalid_argument("fractions must be strictly increasing");
  }
  SweepReport report{method.name, {fractions.begin(), fractions.end()}, {}};
  for (double v : fractions) {
    std::vector<TrainingPair> pairs;
    for (const auto& s : scenes) pairs.push_back(capture(s, v));
    MseRow row = evaluate(method, pairs, config);
    row.method = method.name;
    report.rows.push_back(row);
  }
  return report;
}

std::string DatasetStats::to_text() const {
  std::ostringstream os;
  os << (kind == DatasetKind::ldr ? "LDR" : "HDR") << " images: " << image_count << " (skipped " << skipped << ")\n";
  if (kind == DatasetKind::ldr) {
    os << "mean top-code mass: " << fixed(mean_top_mass) << "\n";
    os << "min/max top-code mass: "
       << fixed(top_mass.empty() ? 0.0 : *std::min_element(top_mass.begin(), top_mass.end())) << " / "
       << fixed(top_mass.empty() ? 0.0 : *std::max_element(top_mass.begin(), top_mass.end())) << "\n";
  } else {
    os << "stops above 1    fraction of pixels\n";
    for (const auto& [stops, frac] : tail) os << "  " << fixed(stops, 0) << "              " << fixed(frac) << "\n";
  }
  os << "histogram (bin start, mean mass):\n";
  for (std::size_t i = 0; i < mean_mass.size(); ++i)
    if (mean_mass[i] > 0.0) os << "  " << fixed(bin_edges[i], 4) << "  " << fixed(mean_mass[i]) << "\n";
  return os.str();
}

std::string DatasetStats::to_records() const {
  std::ostringstream os;
  os << "stats kind=" << (kind == DatasetKind::ldr ? "ldr" : "hdr") << " images=" << image_count
     << " skipped=" << skipped << " mean_top_mass=" << format_double(mean_top_mass) << "\n";
  for (std::size_t i = 0; i < mean_mass.size(); ++i)
    os << "bin lo=" << format_double(bin_edges[i]) << " hi=" << format_double(bin_edges[i + 1])
       << " mass=" << format_double(mean_mass[i]) << "\n";
  for (const auto& [stops, frac] : tail) os << "tail stops=" << format_double(stops) << " fraction=" << format_double(frac) << "\n";
  return os.str();
}

DatasetStats ldr_stats(std::span<const ImageLDR> images) {
  if (images.empty()) throw std::invalid_argument("no LDR images to summarize");
  DatasetStats st;
  st.kind = DatasetKind::ldr;
  st.image_count = images.size();
  for (const auto& img : images) {
    const Histogram h = histogram(img.to_float(), 256, -0.5 / 255.0, 255.5 / 255.0, ChannelMode::max_channel);
    if (st.mean_mass.empty()) {
      st.bin_edges = h.bin_edges;
      st.mean_mass.assign(h.bin_count(), 0.0);
    }
    for (std::size_t i = 0; i < h.bin_count(); ++i) st.mean_mass[i] += h.mass(i) / images.size();
    st.top_mass.push_back(h.mass(255));
    st.mean_top_mass += h.mass(255) / images.size();
  }
  return st;
}

DatasetStats hdr_stats(std::span<const ImageHDR> images) {
  if (images.empty()) throw std::invalid_argument("no HDR images to summarize");
  DatasetStats st;
  st.kind = DatasetKind::hdr;
  st.image_count = images.size();
  constexpr int kMaxStops = 8;
  std::vector<double> tail(kMaxStops + 1, 0.0);
  for (const auto& img : images) {
    auto peaks = channel_samples(img.raster(), ChannelMode::max_channel);
    std::vector<float> logs(peaks.size());
    for (std::size_t i = 0; i < peaks.size(); ++i) logs[i] = static_cast<float>(std::log2(std::max(peaks[i], 1e-6f)));
    const Histogram h = histogram(logs, 48, -12.0, 12.0);
    if (st.mean_mass.empty()) {
      st.bin_edges = h.bin_edges;
      st.mean_mass.assign(h.bin_count(), 0.0);
    }
    for (std::size_t i = 0; i < h.bin_count(); ++i) st.mean_mass[i] += h.mass(i) / images.size();
    for (int k = 0; k <= kMaxStops; ++k) {
      const double thr = std::ldexp(1.0, k);
      const auto n = std::count_if(peaks.begin(), peaks.end(), [&](float p) { return p >= thr; });
      tail[k] += static_cast<double>(n) / peaks.size() / images.size();
    }
  }
  for (int k = 0; k <= kMaxStops; ++k) st.tail.emplace_back(k, tail[k]);
  return st;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::initializer_list<const char*> extensions) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* e : extensions)
      if (ext == e) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

DatasetStats dataset_stats(const std::filesystem::path& dir, DatasetKind kind) {
  std::size_t skipped = 0;
  DatasetStats st;
  if (kind == DatasetKind::ldr) {
    std::vector<ImageLDR> images;
    for (const auto& p : list_files(dir, {".png"})) {
      try {
        images.push_back(read_ldr(p));
      } catch (const std::exception&) {
        ++skipped;
      }
    }
    if (images.empty()) throw std::runtime_error("no readable LDR images in '" + dir.string() + "'");
    st = ldr_stats(images);
  } else {
    std::vector<ImageHDR> images;
    for (const auto& p : list_files(dir, {".hdr", ".pfm", ".rgbe", ".pic"})) {
      try {
        images.push_back(read_hdr(p));
      } catch (const std::exception&) {
        ++skipped;
      }
    }
    if (images.empty()) throw std::runtime_error("no readable HDR images in '" + dir.string() + "'");
    st = hdr_stats(images);
  }
  st.skipped = skipped;
  return st;
}

std::vector<TrainingPair> load_pairs(const std::filesystem::path& dir) {
  std::vector<TrainingPair> out;
  for (const auto& png : list_files(dir, {".png"})) {
    std::filesystem::path target;
    for (const char* ext : {".pfm", ".hdr"}) {
      auto candidate = png;
      candidate.replace_extension(ext);
      if (std::filesystem::exists(candidate)) {
        target = candidate;
        break;
      }
    }
    if (target.empty()) continue;
    TrainingPair pair{read_ldr(png), read_hdr(target), {}};
    auto meta = png;
    meta.replace_extension(".meta");
    if (std::filesystem::exists(meta)) {
      std::ifstream f(meta);
      std::stringstream ss;
      ss << f.rdbuf();
      pair.params = parse_camera_meta(ss.str()).first;
    }
    if (pair.input.width() != pair.target.width() || pair.input.height() != pair.target.height()) {
      throw std::runtime_error("size mismatch between '" + png.string() + "' and '" + target.string() + "'");
    }
    out.push_back(std::move(pair));
  }
  return out;
}

void save_pair(const TrainingPair& pair, const std::filesystem::path& dir, const std::string& stem,
               const CropSpec* crop) {
  write_ldr(pair.input, dir / (stem + ".png"));
  write_hdr(pair.target, dir / (stem + ".pfm"));
  std::ofstream meta(dir / (stem + ".meta"));
  meta << format_camera_meta(pair.params, crop);
  if (!meta) throw std::runtime_error("failed writing metadata for '" + stem + "'");
}

}  // namespace hdrrecon
