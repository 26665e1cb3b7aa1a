#include "hdrrecon/train.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hdrrecon {

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  adam.validate();
  loss.validate();
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv) {
  TrainConfig c;
  c.steps = static_cast<int>(kv.get_int_or("steps", c.steps));
  c.batch = static_cast<int>(kv.get_int_or("batch", c.batch));
  c.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", 0));
  c.adam.learning_rate = kv.get_double_or("lr", c.adam.learning_rate);
  c.loss = LossConfig::from_key_values(kv);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "steps = " << steps << "\nbatch = " << batch << "\nseed = " << seed
     << "\nlr = " << format_double(adam.learning_rate) << "\n"
     << loss.to_text();
  return os.str();
}

std::vector<double> train(Network<float>& net, std::span<const TrainingPair> pairs, const TrainConfig& config,
                          const TrainProgress& progress) {
  Adam optimizer(config.adam);
  return train(net, optimizer, pairs, config, progress);
}

std::vector<double> train(Network<float>& net, Adam& optimizer, std::span<const TrainingPair> pairs,
                          const TrainConfig& config, const TrainProgress& progress) {
  config.validate();
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  for (const auto& p : pairs) {
    if (p.input.width() != pairs[0].input.width() || p.input.height() != pairs[0].input.height() ||
        p.target.width() != p.input.width() || p.target.height() != p.input.height()) {
      throw std::invalid_argument("training pairs must share one size");
    }
  }
  const std::size_t batch = std::min<std::size_t>(config.batch, pairs.size());

  std::vector<Tensor4<double>> targets, masks;
  for (const auto& p : pairs) {
    targets.push_back(log_target(p.target, config.loss.epsilon));
    masks.push_back(mask_tensor(blend_mask(p.input, config.loss.tau)));
  }

  Rng rng(derive_seed(config.seed, {0x7472u}));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::vector<double> trace;
  trace.reserve(config.steps);
  std::vector<ImageLDR> inputs(batch);
  const int h = pairs[0].input.height(), w = pairs[0].input.width();
  for (int step = 1; step <= config.steps; ++step) {
    Tensor4<double> y(static_cast<int>(batch), h, w, 3), alpha(static_cast<int>(batch), h, w, 1);
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      inputs[b] = pairs[i].input;
      std::copy(targets[i].raw(), targets[i].raw() + targets[i].size(), y.raw() + y.index(int(b), 0, 0, 0));
      std::copy(masks[i].raw(), masks[i].raw() + masks[i].size(), alpha.raw() + alpha.index(int(b), 0, 0, 0));
    }
    const Tensor4<double> yhat = net.forward(to_tensor<float>(std::span<const ImageLDR>(inputs))).cast<double>();
    const LossValue loss = hdr_loss(yhat, y, alpha, config.loss);
    net.backward(loss.gradient.cast<float>());
    optimizer.step(net);
    trace.push_back(loss.value);
    if (progress) progress(step, loss.value);
  }
  return trace;
}

double tail_mean(std::span<const double> trace, std::size_t count) {
  if (trace.empty()) throw std::invalid_argument("empty loss trace");
  count = std::min(count, trace.size());
  return std::accumulate(trace.end() - static_cast<std::ptrdiff_t>(count), trace.end(), 0.0) / count;
}

}  // namespace hdrrecon
