#include "hdrrecon/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hdrrecon {
namespace {

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw WeightsError("weight file is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void floats(float* dst, std::size_t n) {
    if (n > (bytes_.size() - pos_) / 4) throw WeightsError("weight file is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n * 4);
    pos_ += n * 4;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::vector<nn::Param<float>*> arrays_of(Network<float>& net) {
  auto a = net.parameters();
  for (auto* b : net.buffers()) a.push_back(b);
  return a;
}

}  // namespace

void save_weights(const Network<float>& net, const std::filesystem::path& path) {
  std::string out(kWeightsMagic, 4);
  put_u32(out, kWeightsVersion);
  const std::string cfg = net.config().to_text();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  auto arrays = arrays_of(const_cast<Network<float>&>(net));
  put_u32(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto* p : arrays) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->shape.size()));
    for (int d : p->shape) put_u32(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(float));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw WeightsError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw WeightsError("failed writing '" + path.string() + "'");
}

Network<float> load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw WeightsError("cannot open '" + path.string() + "'");
  Reader in(std::string(std::istreambuf_iterator<char>(f), {}));
  if (in.text(4) != std::string(kWeightsMagic, 4)) throw WeightsError("not a weight file (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kWeightsVersion) {
    throw WeightsError("unsupported weight file version " + std::to_string(version));
  }
  NetworkConfig cfg;
  try {
    cfg = NetworkConfig::from_key_values(KeyValues::parse(in.text(in.u32())));
  } catch (const ConfigError& e) {
    throw WeightsError(std::string("bad config block: ") + e.what());
  }
  Network<float> net(cfg);
  auto arrays = arrays_of(net);
  if (in.u32() != arrays.size()) throw WeightsError("array count does not match the stored config");
  for (auto* p : arrays) {
    const std::string name = in.text(in.u32());
    if (name != p->name) throw WeightsError("expected array '" + p->name + "', found '" + name + "'");
    const std::uint32_t rank = in.u32();
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(in.u32()));
    if (shape != p->shape) throw WeightsError("shape mismatch for '" + name + "'");
    in.floats(p->value.data(), p->value.size());
  }
  if (!in.done()) throw WeightsError("trailing bytes after the last array");
  return net;
}

Network<float> load_weights(const std::filesystem::path& path, const NetworkConfig& expected) {
  Network<float> net = load_weights(path);
  if (!(net.config() == expected)) {
    throw WeightsError("weight file config differs from the requested network:\n" + net.config().to_text());
  }
  return net;
}

}  // namespace hdrrecon
