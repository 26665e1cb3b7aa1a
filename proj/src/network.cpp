#include "hdrrecon/network.hpp"

#include <sstream>
#include <stdexcept>

namespace hdrrecon {

NetworkConfig NetworkConfig::toy() { return {3, {32, 64, 128}, 128, true, "toy"}; }

NetworkConfig NetworkConfig::full() { return {5, {64, 128, 256, 512, 512}, 512, true, "full"}; }

NetworkConfig NetworkConfig::tiny() { return {2, {8, 8}, 8, true, "tiny"}; }

NetworkConfig NetworkConfig::preset_named(const std::string& name) {
  if (name == "toy") return toy();
  if (name == "full" || name == "vgg16") return full();
  if (name == "tiny") return tiny();
  throw ConfigError("unknown network preset '" + name + "'");
}

NetworkConfig NetworkConfig::from_key_values(const KeyValues& kv) {
  NetworkConfig cfg = preset_named(kv.get_or("preset", "toy"));
  if (kv.has("levels")) cfg.levels = static_cast<int>(kv.get_int("levels"));
  if (kv.has("channels")) {
    cfg.channels.clear();
    for (long c : kv.get_int_list("channels")) cfg.channels.push_back(static_cast<int>(c));
  }
  if (kv.has("latent_channels")) cfg.latent_channels = static_cast<int>(kv.get_int("latent_channels"));
  cfg.skip_connections = kv.get_bool_or("skip", cfg.skip_connections);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string NetworkConfig::to_text() const {
  std::ostringstream os;
  os << "preset = " << preset << "\nlevels = " << levels << "\nchannels = ";
  for (std::size_t i = 0; i < channels.size(); ++i) os << (i ? "," : "") << channels[i];
  os << "\nlatent_channels = " << latent_channels << "\nskip = " << (skip_connections ? 1 : 0) << "\n";
  return os.str();
}

void NetworkConfig::validate() const {
  if (levels < 1 || levels > 5) throw std::invalid_argument("network levels must be in [1,5]");
  if (static_cast<int>(channels.size()) != levels) {
    throw std::invalid_argument("channel list needs one entry per level");
  }
  for (int c : channels)
    if (c < 1) throw std::invalid_argument("channel counts must be positive");
  if (latent_channels < 1) throw std::invalid_argument("latent channels must be positive");
}

template <typename T>
Network<T>::Network(NetworkConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(init_seed);
  const int levels = config_.levels;
  int in = 3;
  for (int l = 0; l < levels; ++l) {
    const int c = config_.channels[l];
    const std::string p = "enc" + std::to_string(l);
    EncoderLevel e;
    e.conv_a = nn::Conv2d<T>(p + ".conv_a", in, c, 3);
    e.conv_b = nn::Conv2d<T>(p + ".conv_b", c, c, 3);
    e.conv_a.init_xavier(rng);
    e.conv_b.init_xavier(rng);
    encoder_.push_back(std::move(e));
    in = c;
  }
  latent_a_ = nn::Conv2d<T>("latent.conv_a", in, config_.latent_channels, 3);
  latent_b_ = nn::Conv2d<T>("latent.conv_b", config_.latent_channels, config_.latent_channels, 3);
  latent_a_.init_xavier(rng);
  latent_b_.init_xavier(rng);

  decoder_.resize(levels);
  for (int l = levels - 1; l >= 0; --l) {
    const int from = l == levels - 1 ? config_.latent_channels : config_.channels[l + 1];
    const int to = config_.channels[l];
    const std::string p = "dec" + std::to_string(l);
    DecoderLevel& d = decoder_[l];
    d.up = nn::Deconv2x<T>(p + ".up", from, to);
    d.up.init_bilinear();
    d.norm = nn::BatchNorm<T>(p + ".bn", to);
    if (config_.skip_connections) {
      d.fuse = nn::SkipFuse<T>(p + ".fuse", to, kLogEpsilon);
      d.fuse.init_identity_sum();
    }
  }
  output_ = nn::Conv2d<T>("out.conv", config_.channels[0], 3, 1);
  output_.init_xavier(rng);
}

template <typename T>
Tensor4<T> Network<T>::preprocess(const Tensor4<T>& input) const {
  if (input.channels() != 3) throw std::invalid_argument("network input must have 3 channels");
  const int f = config_.downscale_factor();
  if (input.height() % f != 0 || input.width() % f != 0) {
    throw std::invalid_argument("input " + std::to_string(input.width()) + "x" + std::to_string(input.height()) +
                                " is not divisible by " + std::to_string(f));
  }
  Tensor4<T> x = input;
  for (std::size_t p = 0; p < x.pixels(); ++p)
    for (int c = 0; c < 3; ++c) x[p * 3 + c] = static_cast<T>(x[p * 3 + c] * kInputScale - kInputMean[c]);
  return x;
}

template <typename T>
Tensor4<T> Network<T>::run(const Tensor4<T>& input, nn::Mode mode, bool record) {
  Tensor4<T> x = preprocess(input);
  const bool skip = config_.skip_connections;
  for (auto& e : encoder_) {
    x = e.conv_a.forward(x, record ? &e.conv_a_cache : nullptr);
    nn::Relu<T>::forward(x, record ? &e.relu_a_cache : nullptr);
    x = e.conv_b.forward(x, record ? &e.conv_b_cache : nullptr);
    nn::Relu<T>::forward(x, record ? &e.relu_b_cache : nullptr);
    if (skip) e.features = x;
    x = e.pool.forward(x, record ? &e.pool_cache : nullptr);
  }
  x = latent_a_.forward(x, record ? &latent_a_cache_ : nullptr);
  nn::Relu<T>::forward(x, record ? &latent_a_relu_ : nullptr);
  x = latent_b_.forward(x, record ? &latent_b_cache_ : nullptr);
  nn::Relu<T>::forward(x, record ? &latent_b_relu_ : nullptr);
  for (int l = config_.levels - 1; l >= 0; --l) {
    DecoderLevel& d = decoder_[l];
    x = d.up.forward(x, record ? &d.up_cache : nullptr);
    x = d.norm.forward(x, mode, record ? &d.norm_cache : nullptr);
    nn::Relu<T>::forward(x, record ? &d.relu_cache : nullptr);
    if (skip) x = d.fuse.forward(x, encoder_[l].features, record ? &d.fuse_cache : nullptr);
  }
  return output_.forward(x, record ? &output_cache_ : nullptr);
}

template <typename T>
Tensor4<T> Network<T>::forward(const Tensor4<T>& input, nn::Mode mode) {
  has_forward_ = false;
  Tensor4<T> y = run(input, mode, true);
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor4<T> Network<T>::infer(const Tensor4<T>& input) const {
  Tensor4<T> x = preprocess(input);
  const bool skip = config_.skip_connections;
  std::vector<Tensor4<T>> features(config_.levels);
  for (int l = 0; l < config_.levels; ++l) {
    const auto& e = encoder_[l];
    x = e.conv_a.forward(x, nullptr);
    nn::Relu<T>::forward(x, nullptr);
    x = e.conv_b.forward(x, nullptr);
    nn::Relu<T>::forward(x, nullptr);
    if (skip) features[l] = x;
    x = e.pool.forward(x, nullptr);
  }
  x = latent_a_.forward(x, nullptr);
  nn::Relu<T>::forward(x, nullptr);
  x = latent_b_.forward(x, nullptr);
  nn::Relu<T>::forward(x, nullptr);
  for (int l = config_.levels - 1; l >= 0; --l) {
    const DecoderLevel& d = decoder_[l];
    x = d.up.forward(x, nullptr);
    x = d.norm.infer(x);
    nn::Relu<T>::forward(x, nullptr);
    if (skip) x = d.fuse.forward(x, features[l], nullptr);
  }
  return output_.forward(x, nullptr);
}

template <typename T>
void Network<T>::backward(const Tensor4<T>& grad_output) {
  if (!has_forward_) throw std::logic_error("backward called before forward");
  zero_grad();
  const bool skip = config_.skip_connections;
  const int levels = config_.levels;
  Tensor4<T> g = output_.backward(grad_output, output_cache_);
  std::vector<Tensor4<T>> skip_grads(levels);
  for (int l = 0; l < levels; ++l) {
    DecoderLevel& d = decoder_[l];
    if (skip) {
      auto [gd, ge] = d.fuse.backward(g, d.fuse_cache);
      g = std::move(gd);
      skip_grads[l] = std::move(ge);
    }
    nn::Relu<T>::backward(g, d.relu_cache);
    g = d.norm.backward(g, d.norm_cache);
    g = d.up.backward(g, d.up_cache);
  }
  nn::Relu<T>::backward(g, latent_b_relu_);
  g = latent_b_.backward(g, latent_b_cache_);
  nn::Relu<T>::backward(g, latent_a_relu_);
  g = latent_a_.backward(g, latent_a_cache_);
  for (int l = levels - 1; l >= 0; --l) {
    EncoderLevel& e = encoder_[l];
    g = e.pool.backward(g, e.pool_cache);
    if (skip) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += skip_grads[l][i];
    }
    nn::Relu<T>::backward(g, e.relu_b_cache);
    g = e.conv_b.backward(g, e.conv_b_cache);
    nn::Relu<T>::backward(g, e.relu_a_cache);
    g = e.conv_a.backward(g, e.conv_a_cache, l > 0);
  }
}

template <typename T>
std::vector<nn::Param<T>*> Network<T>::parameters() {
  std::vector<nn::Param<T>*> out;
  for (auto& e : encoder_) {
    out.insert(out.end(), {&e.conv_a.weight, &e.conv_a.bias, &e.conv_b.weight, &e.conv_b.bias});
  }
  out.insert(out.end(), {&latent_a_.weight, &latent_a_.bias, &latent_b_.weight, &latent_b_.bias});
  for (int l = config_.levels - 1; l >= 0; --l) {
    auto& d = decoder_[l];
    out.insert(out.end(), {&d.up.weight, &d.up.bias, &d.norm.gamma, &d.norm.beta});
    if (config_.skip_connections) out.insert(out.end(), {&d.fuse.weight, &d.fuse.bias});
  }
  out.insert(out.end(), {&output_.weight, &output_.bias});
  return out;
}

template <typename T>
std::vector<const nn::Param<T>*> Network<T>::parameters() const {
  auto mut = const_cast<Network*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::vector<nn::Param<T>*> Network<T>::buffers() {
  std::vector<nn::Param<T>*> out;
  for (int l = config_.levels - 1; l >= 0; --l) {
    out.push_back(&decoder_[l].norm.running_mean);
    out.push_back(&decoder_[l].norm.running_var);
  }
  return out;
}

template <typename T>
std::vector<const nn::Param<T>*> Network<T>::buffers() const {
  auto mut = const_cast<Network*>(this)->buffers();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
std::uint64_t Network<T>::activation_pattern() const {
  if (!has_forward_) throw std::logic_error("activation pattern requested before forward");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](auto begin, auto end) {
    for (auto it = begin; it != end; ++it) h = (h ^ static_cast<std::uint64_t>(*it)) * 0x100000001b3ULL;
  };
  for (const auto& e : encoder_) {
    mix(e.relu_a_cache.active.begin(), e.relu_a_cache.active.end());
    mix(e.relu_b_cache.active.begin(), e.relu_b_cache.active.end());
    mix(e.pool_cache.argmax.begin(), e.pool_cache.argmax.end());
  }
  mix(latent_a_relu_.active.begin(), latent_a_relu_.active.end());
  mix(latent_b_relu_.active.begin(), latent_b_relu_.active.end());
  for (const auto& d : decoder_) {
    mix(d.relu_cache.active.begin(), d.relu_cache.active.end());
    mix(d.fuse_cache.active.begin(), d.fuse_cache.active.end());
  }
  return h;
}

template <typename T>
Tensor4<T> to_tensor(std::span<const ImageLDR> images) {
  if (images.empty()) throw std::invalid_argument("empty image batch");
  const int w = images[0].width(), h = images[0].height();
  Tensor4<T> t(static_cast<int>(images.size()), h, w, 3);
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b].width() != w || images[b].height() != h) throw std::invalid_argument("batch images differ in size");
    auto codes = images[b].codes().data();
    T* dst = t.raw() + t.index(static_cast<int>(b), 0, 0, 0);
    for (std::size_t i = 0; i < codes.size(); ++i) dst[i] = static_cast<T>(codes[i] / 255.0);
  }
  return t;
}

template <typename T>
Tensor4<T> to_tensor(const ImageLDR& image) {
  return to_tensor<T>(std::span<const ImageLDR>(&image, 1));
}

template class Network<float>;
template class Network<double>;
template Tensor4<float> to_tensor<float>(std::span<const ImageLDR>);
template Tensor4<double> to_tensor<double>(std::span<const ImageLDR>);
template Tensor4<float> to_tensor<float>(const ImageLDR&);
template Tensor4<double> to_tensor<double>(const ImageLDR&);

}  // namespace hdrrecon
