// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hpc/csv.hpp"
#include "hpc/network.hpp"
#include "hpc/scene.hpp"

namespace hpc {

/// Sweep axes: distributive function, similarity-matrix construction, kernel
/// geometry, and kernel count.
enum class AblationAxis { DistributiveFn = 0, DistanceMatrix = 1, KernelShape = 2,
                          KernelCount = 3 };

const char* to_string(AblationAxis axis);
AblationAxis ablation_axis_from_string(const std::string& name);

struct AblationOptions {
  int seeds = 3;        // independent train/test draws; scenes are paired across variants
  int train_scenes = 1;
  int test_scenes = 1;
  int epochs = 40;      // multi-kernel variants converge slower than single-kernel ones
  double lr = 2e-3;     // every variant must survive its zero-head warmup transient
  double momentum = 0.9;
  int threads = 1;
  std::uint64_t train_seed_base = 1000;  // scene seed = base + 100*seed + index
  std::uint64_t test_seed_base = 5000;
  SceneSpec scene;          // overridden per call; defaults come from desk_scene()
  NetworkConfig base;       // variants override exactly one axis

  AblationOptions();
};

struct AblationRow {
  std::string variant;
  std::vector<double> per_seed_miou;
  double mean_miou = 0.0;
  double mean_accuracy = 0.0;
};

struct AblationReport {
  AblationAxis axis = AblationAxis::DistributiveFn;
  std::vector<AblationRow> rows;
};

/// Trains every variant of the axis on identical scene sets and evaluates on
/// a held-out split. Deterministic for fixed options.
AblationReport run_ablation(AblationAxis axis, const AblationOptions& opts);

/// The variant list an axis sweeps, as (label, config) pairs.
std::vector<std::pair<std::string, NetworkConfig>> ablation_variants(AblationAxis axis,
                                                                     const NetworkConfig& base);

TextTable ablation_table(const AblationReport& report, int seeds);

/// Scene recipe small enough for repeated CPU training runs (~2k points).
SceneSpec desk_scene();

/// The reference overfit task: desk-scale scene, depth-3 single-sphere
/// network. Tests pin its seed-0 loss curve; the acceptance suite trains it
/// to 95% point accuracy.
struct OverfitTask {
  SceneSpec scene;
  NetworkConfig config;
  TrainOptions train;
};
OverfitTask reference_overfit_task();

}  // namespace hpc
