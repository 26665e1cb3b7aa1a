#include "hdrrecon/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace hdrrecon {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must be in [0,1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
}

void Adam::set_learning_rate(double lr) {
  AdamConfig c = config_;
  c.learning_rate = lr;
  c.validate();
  config_ = c;
}

template <typename T>
void adam_update(std::span<T> value, std::span<const T> grad, std::span<double> m, std::span<double> v,
                 std::int64_t t, const AdamConfig& cfg) {
  if (grad.size() != value.size() || m.size() != value.size() || v.size() != value.size()) {
    throw std::invalid_argument("adam buffers differ in size");
  }
  if (t < 1) throw std::invalid_argument("adam step counter starts at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double mh = m[i] / c1, vh = v[i] / c2;
    value[i] = static_cast<T>(value[i] - cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon));
  }
}

template <typename T>
void Adam::step(Network<T>& net) {
  auto params = net.parameters();
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("adam state belongs to a different network");
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (m_[i].size() != p->size()) throw std::logic_error("adam state belongs to a different network");
    adam_update<T>(p->value, p->grad, m_[i], v_[i], t_, config_);
  }
}

template void Adam::step<float>(Network<float>&);
template void Adam::step<double>(Network<double>&);
template void adam_update<float>(std::span<float>, std::span<const float>, std::span<double>, std::span<double>,
                                 std::int64_t, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, std::int64_t, const AdamConfig&);

}  // namespace hdrrecon
