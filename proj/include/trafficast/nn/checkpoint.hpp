#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "trafficast/nn/network.hpp"

namespace trafficast::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic "TRFCKPT\0", u32 version, input shape, a
/// per-layer manifest and the parameters as little-endian doubles.
[[nodiscard]] std::string serialize(const Network& net);
[[nodiscard]] Network deserialize(const std::string& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
[[nodiscard]] Network load_checkpoint(const std::filesystem::path& path);

}  // namespace trafficast::nn
