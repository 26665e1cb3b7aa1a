#include "hdrrecon/codec.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace hdrrecon {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& header,
                std::span<const std::uint8_t> payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// Sequential reader over an in-memory file for the text headers.
class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool next_line(std::string& line) {
    if (pos_ >= bytes_.size()) return false;
    line.clear();
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') line.push_back(static_cast<char>(bytes_[pos_++]));
    if (pos_ >= bytes_.size()) return false;  // header lines must be newline terminated
    ++pos_;
    return true;
  }

  // Next whitespace-delimited token; consumes exactly one trailing whitespace byte.
  std::string token() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) tok.push_back(static_cast<char>(bytes_[pos_++]));
    if (pos_ < bytes_.size()) ++pos_;
    return tok;
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int parse_dim(const std::string& tok, const char* what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    throw FormatError(std::string("bad ") + what + " '" + tok + "'");
  }
  if (used != tok.size() || v < 1 || v > (1 << 20)) {
    throw FormatError(std::string("bad ") + what + " '" + tok + "'");
  }
  return static_cast<int>(v);
}

ImageHDR decode_rgbe_file(std::span<const std::uint8_t> bytes) {
  ByteCursor cur(bytes);
  std::string line;
  if (!cur.next_line(line) || (line.rfind("#?RADIANCE", 0) != 0 && line.rfind("#?RGBE", 0) != 0)) {
    throw FormatError("missing Radiance signature");
  }
  bool format_ok = true;
  for (;;) {
    if (!cur.next_line(line)) throw FormatError("unterminated Radiance header");
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0) format_ok = (line == "FORMAT=32-bit_rle_rgbe");
  }
  if (!format_ok) throw FormatError("unsupported Radiance pixel format");
  if (!cur.next_line(line)) throw FormatError("missing resolution line");
  std::istringstream res(line);
  std::string ylabel, hs, xlabel, ws, extra;
  res >> ylabel >> hs >> xlabel >> ws;
  if (ylabel != "-Y" || xlabel != "+X" || (res >> extra)) {
    throw FormatError("unsupported resolution line '" + line + "'");
  }
  const int height = parse_dim(hs, "height");
  const int width = parse_dim(ws, "width");

  const std::size_t offset = cur.position();
  const std::size_t need = static_cast<std::size_t>(width) * height * 4;
  if (bytes.size() - offset < need) throw FormatError("truncated RGBE payload");
  if (bytes.size() - offset > need) throw FormatError("trailing bytes after RGBE payload");

  Raster<float> px(width, height, 3);
  const std::uint8_t* p = bytes.data() + offset;
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = p + static_cast<std::size_t>(y) * width * 4;
    const bool new_rle = width >= 8 && width < 0x8000 && row[0] == 2 && row[1] == 2 && (row[2] & 0x80) == 0;
    const bool old_rle = row[0] == 1 && row[1] == 1 && row[2] == 1;
    if (new_rle || old_rle) throw FormatError("run-length encoded RGBE is not supported");
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* q = row + x * 4;
      auto rgb = decode_rgbe({q[0], q[1], q[2], q[3]});
      for (int c = 0; c < 3; ++c) px(x, y, c) = rgb[c];
    }
  }
  return ImageHDR(std::move(px));
}

ImageHDR decode_pfm_file(std::span<const std::uint8_t> bytes) {
  ByteCursor cur(bytes);
  const std::string magic = cur.token();
  if (magic == "Pf") throw FormatError("grayscale PFM is not supported");
  if (magic != "PF") throw FormatError("missing PFM signature");
  const int width = parse_dim(cur.token(), "width");
  const int height = parse_dim(cur.token(), "height");
  const std::string scale_tok = cur.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw FormatError("bad PFM scale '" + scale_tok + "'");
  }
  if (scale == 0.0 || !std::isfinite(scale)) throw FormatError("bad PFM scale '" + scale_tok + "'");
  const bool little = scale < 0.0;

  const std::size_t offset = cur.position();
  const std::size_t count = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - offset < count * 4) throw FormatError("truncated PFM payload");

  const bool swap = little != (std::endian::native == std::endian::little);
  Raster<float> px(width, height, 3);
  const std::uint8_t* p = bytes.data() + offset;
  // Rows are stored bottom to top.
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        std::uint32_t u;
        std::memcpy(&u, p, 4);
        p += 4;
        if (swap) u = __builtin_bswap32(u);
        px(x, y, c) = std::bit_cast<float>(u);
      }
    }
  }
  try {
    return ImageHDR(std::move(px));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("PFM payload: ") + e.what());
  }
}

}  // namespace

HdrFormat hdr_format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".pfm") return HdrFormat::pfm;
  if (ext == ".hdr" || ext == ".rgbe" || ext == ".pic") return HdrFormat::rgbe;
  throw std::invalid_argument("unknown HDR extension '" + ext + "'");
}

std::array<std::uint8_t, 4> encode_rgbe(float r, float g, float b) {
  const float v = std::max({r, g, b});
  if (!(v >= 1e-32f)) return {0, 0, 0, 0};
  int e = 0;
  const float m = std::frexp(v, &e);
  const float scale = m * 256.0f / v;
  // m < 1 keeps every mantissa below 256; exponents outside the byte range saturate.
  if (e + 128 > 255) return {255, 255, 255, 255};
  if (e + 128 < 1) return {0, 0, 0, 0};
  return {static_cast<std::uint8_t>(r * scale), static_cast<std::uint8_t>(g * scale),
          static_cast<std::uint8_t>(b * scale), static_cast<std::uint8_t>(e + 128)};
}

std::array<float, 3> decode_rgbe(std::array<std::uint8_t, 4> rgbe) {
  if (rgbe[3] == 0) return {0.0f, 0.0f, 0.0f};
  const double f = std::ldexp(1.0, static_cast<int>(rgbe[3]) - (128 + 8));
  return {static_cast<float>((rgbe[0] + 0.5) * f), static_cast<float>((rgbe[1] + 0.5) * f),
          static_cast<float>((rgbe[2] + 0.5) * f)};
}

ImageHDR read_hdr(const std::filesystem::path& path, HdrFormat format) {
  const auto bytes = read_file(path);
  return format == HdrFormat::rgbe ? decode_rgbe_file(bytes) : decode_pfm_file(bytes);
}

ImageHDR read_hdr(const std::filesystem::path& path) { return read_hdr(path, hdr_format_from_path(path)); }

void write_hdr(const ImageHDR& image, const std::filesystem::path& path, HdrFormat format) {
  const int w = image.width();
  const int h = image.height();
  if (format == HdrFormat::rgbe) {
    std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(h) + " +X " +
                         std::to_string(w) + "\n";
    std::vector<std::uint8_t> payload;
    payload.reserve(static_cast<std::size_t>(w) * h * 4);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        auto q = encode_rgbe(image(x, y, 0), image(x, y, 1), image(x, y, 2));
        payload.insert(payload.end(), q.begin(), q.end());
      }
    write_file(path, header, payload);
    return;
  }
  std::string header = "PF\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
  std::vector<std::uint8_t> payload(static_cast<std::size_t>(w) * h * 12);
  std::uint8_t* p = payload.data();
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(image(x, y, c));
        if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
        std::memcpy(p, &u, 4);
        p += 4;
      }
  }
  write_file(path, header, payload);
}

void write_hdr(const ImageHDR& image, const std::filesystem::path& path) {
  write_hdr(image, path, hdr_format_from_path(path));
}

ImageLDR read_ldr(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  const bool rgb = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool wide = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  if (!rgb || alpha || wide) {
    png_image_free(&img);
    throw FormatError("PNG " + path.string() + " is not 8-bit 3-channel RGB");
  }
  img.format = PNG_FORMAT_RGB;
  Raster<std::uint8_t> codes(static_cast<int>(img.width), static_cast<int>(img.height), 3);
  if (!png_image_finish_read(&img, nullptr, codes.data().data(), 0, nullptr)) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return ImageLDR(std::move(codes));
}

void write_ldr(const ImageLDR& image, const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.codes().data().data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace hdrrecon
