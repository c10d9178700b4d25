#pragma once

#include "policytest/mdp.hpp"

#include <json.hpp>

#include <string>

namespace policytest {

/// Reads an instance from the JSON schema
///   { n_states, n_actions, gamma, rho: [s], reward: [s][a],
///     kernel: [s][a][s'], policy: [s][a], threshold (optional, default 0) }
/// A non-zero threshold is folded into the reward on load.
MdpInstance instance_from_json(const nlohmann::json& doc);
MdpInstance load_instance_file(const std::string& path);

/// Writes the (threshold-shifted) instance back out with threshold 0.
nlohmann::json instance_to_json(const MdpInstance& instance);

}  // namespace policytest
