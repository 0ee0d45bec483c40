#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "nsp/autodiff.hpp"
#include "nsp/networks.hpp"

namespace nsp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Parameters of an actor/critic pair plus the manifest that describes
/// them.
struct CheckpointData {
  NetworkShape shape;
  ParameterSet actor;
  ParameterSet critic;
  nlohmann::json manifest;
};

/// Layout: 8-byte magic "NSPCKPT\n", u32 version, u64 manifest length,
/// manifest JSON (names, shapes, activations, K, F, metadata), then every
/// tensor's values as little-endian IEEE-754 doubles in manifest order.
void save_checkpoint(std::ostream& out, const PolicyNetwork& actor,
                     const PolicyNetwork& critic,
                     const nlohmann::json& metadata = nlohmann::json::object());
void save_checkpoint(const std::string& path, const PolicyNetwork& actor,
                     const PolicyNetwork& critic,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Throws CompatibilityError on a bad magic, version or truncated payload.
CheckpointData load_checkpoint(std::istream& in);
CheckpointData load_checkpoint(const std::string& path);

/// Copies checkpointed values into a network with an identical layout.
void restore_parameters(ParameterSet& target, const ParameterSet& source);

}  // namespace nsp
