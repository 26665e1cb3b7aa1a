#pragma once

#include <filesystem>
#include <stdexcept>

#include "hdrrecon/network.hpp"

namespace hdrrecon {

class WeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kWeightsMagic[4] = {'H', 'D', 'R', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

/// Binary layout, all integers little-endian:
///   "HDRW" | u32 version | u32 n + n bytes of config text (`key = value` lines)
///   | u32 array count | per array: u32 name length, name, u32 rank, rank x u32 dims,
///   then prod(dims) float32 values.
/// Arrays are the trainable parameters in declaration order followed by the
/// batchnorm running statistics.
void save_weights(const Network<float>& net, const std::filesystem::path& path);

/// Throws WeightsError on any malformed, truncated or inconsistent file.
Network<float> load_weights(const std::filesystem::path& path);
/// Also rejects files whose stored config differs from `expected`.
Network<float> load_weights(const std::filesystem::path& path, const NetworkConfig& expected);

}  // namespace hdrrecon
