// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hpc {
namespace {

using nlohmann::json;

json parse_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  return j;
}

/// Reads and removes j[key] when present, so leftovers are unknown keys.
template <typename T>
void take(json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: wrong type for key \"") + key + "\"");
  }
  j.erase(it);
}

void reject_unknown(const json& j) {
  if (!j.empty()) {
    throw std::invalid_argument("config: unknown key \"" + j.begin().key() + "\"");
  }
}

}  // namespace

NetworkConfig network_config_from_json(const std::string& text) {
  json j = parse_object(text);
  NetworkConfig cfg;
  take(j, "depth", cfg.depth);
  take(j, "base_channels", cfg.base_channels);
  take(j, "base_radius", cfg.base_radius);
  take(j, "base_cell", cfg.base_cell);
  std::vector<std::string> kernel_names;
  for (KernelShape shape : cfg.kernels) kernel_names.emplace_back(to_string(shape));
  take(j, "kernels", kernel_names);
  cfg.kernels.clear();
  for (const std::string& name : kernel_names) {
    cfg.kernels.push_back(kernel_shape_from_string(name));
  }
  std::string f_name = to_string(cfg.f);
  take(j, "distributive_fn", f_name);
  cfg.f = distributive_fn_from_string(f_name);
  std::string mode_name = to_string(cfg.matrix_mode);
  take(j, "matrix_mode", mode_name);
  cfg.matrix_mode = matrix_mode_from_string(mode_name);
  take(j, "kernel_points", cfg.kernel_points);
  take(j, "oversample_factor", cfg.oversample_factor);
  take(j, "classes", cfg.classes);
  take(j, "input_channels", cfg.input_channels);
  take(j, "shortcut", cfg.shortcut);
  reject_unknown(j);
  cfg.validate();
  return cfg;
}

std::string network_config_to_json(const NetworkConfig& cfg) {
  json j;
  j["depth"] = cfg.depth;
  j["base_channels"] = cfg.base_channels;
  j["base_radius"] = cfg.base_radius;
  j["base_cell"] = cfg.base_cell;
  std::vector<std::string> kernel_names;
  for (KernelShape shape : cfg.kernels) kernel_names.emplace_back(to_string(shape));
  j["kernels"] = kernel_names;
  j["distributive_fn"] = to_string(cfg.f);
  j["matrix_mode"] = to_string(cfg.matrix_mode);
  j["kernel_points"] = cfg.kernel_points;
  j["oversample_factor"] = cfg.oversample_factor;
  j["classes"] = cfg.classes;
  j["input_channels"] = cfg.input_channels;
  j["shortcut"] = cfg.shortcut;
  return j.dump(2) + "\n";
}

SceneSpec scene_spec_from_json(const std::string& text) {
  json j = parse_object(text);
  SceneSpec spec;
  take(j, "seed", spec.seed);
  take(j, "extent", spec.extent);
  take(j, "floor_count", spec.floor_count);
  take(j, "pole_count", spec.pole_count);
  take(j, "sphere_count", spec.sphere_count);
  take(j, "clutter_count", spec.clutter_count);
  take(j, "floor_points", spec.floor_points);
  take(j, "pole_points", spec.pole_points);
  take(j, "sphere_points", spec.sphere_points);
  take(j, "clutter_points", spec.clutter_points);
  take(j, "clutter_radius", spec.clutter_radius);
  take(j, "noise_sigma", spec.noise_sigma);
  take(j, "outlier_fraction", spec.outlier_fraction);
  reject_unknown(j);
  return spec;
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["extent"] = spec.extent;
  j["floor_count"] = spec.floor_count;
  j["pole_count"] = spec.pole_count;
  j["sphere_count"] = spec.sphere_count;
  j["clutter_count"] = spec.clutter_count;
  j["floor_points"] = spec.floor_points;
  j["pole_points"] = spec.pole_points;
  j["sphere_points"] = spec.sphere_points;
  j["clutter_points"] = spec.clutter_points;
  j["clutter_radius"] = spec.clutter_radius;
  j["noise_sigma"] = spec.noise_sigma;
  j["outlier_fraction"] = spec.outlier_fraction;
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

NetworkConfig load_network_config(const std::string& path) {
  try {
    return network_config_from_json(read_text_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

SceneSpec load_scene_spec(const std::string& path) {
  try {
    return scene_spec_from_json(read_text_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace hpc
