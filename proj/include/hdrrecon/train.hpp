#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hdrrecon/adam.hpp"
#include "hdrrecon/camera.hpp"
#include "hdrrecon/loss.hpp"
#include "hdrrecon/network.hpp"

namespace hdrrecon {

struct TrainConfig {
  int steps = 1000;
  int batch = 8;
  std::uint64_t seed = 0;
  AdamConfig adam;
  LossConfig loss;

  void validate() const;
  /// Reads `steps`, `batch`, `seed`, `lr` plus the loss keys.
  static TrainConfig from_key_values(const KeyValues& kv);
  std::string to_text() const;
};

/// Called after every step with the 1-based step index and that step's loss.
using TrainProgress = std::function<void(int step, double loss)>;

/// Mini-batch training over reshuffled epochs of `pairs` (all of one size).
/// Returns one loss value per step, measured on the batch before its update.
std::vector<double> train(Network<float>& net, std::span<const TrainingPair> pairs, const TrainConfig& config,
                          const TrainProgress& progress = {});
/// Same, continuing from an existing optimizer state.
std::vector<double> train(Network<float>& net, Adam& optimizer, std::span<const TrainingPair> pairs,
                          const TrainConfig& config, const TrainProgress& progress = {});

/// Mean of the last `count` trace entries (or all of them if fewer).
double tail_mean(std::span<const double> trace, std::size_t count);

}  // namespace hdrrecon
