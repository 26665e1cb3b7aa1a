#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hdrrecon/network.hpp"

namespace hdrrecon {

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Moment estimates for every trainable parameter of one network.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) { config_.validate(); }

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr);
  std::int64_t steps() const { return t_; }

  /// One bias-corrected update using the gradients currently stored in the network.
  template <typename T>
  void step(Network<T>& net);

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Single bias-corrected update of `value` given its moments at step t (t >= 1).
template <typename T>
void adam_update(std::span<T> value, std::span<const T> grad, std::span<double> m, std::span<double> v,
                 std::int64_t t, const AdamConfig& cfg);

}  // namespace hdrrecon
