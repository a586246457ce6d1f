// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "hpc/network.hpp"
#include "hpc/scene.hpp"

namespace hpc {

/// JSON configs mirror their structs field-for-field. Parsing is strict:
/// unknown keys, wrong types, and invariant violations all throw
/// std::invalid_argument with the offending key named. Missing keys keep
/// their documented defaults.

NetworkConfig network_config_from_json(const std::string& text);
std::string network_config_to_json(const NetworkConfig& cfg);
NetworkConfig load_network_config(const std::string& path);

SceneSpec scene_spec_from_json(const std::string& text);
std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec load_scene_spec(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hpc
