// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hpc/geometry.hpp"
#include "hpc/network.hpp"

namespace hpc {

/// Stable decimal form shared by the CSV writers: printf %.9g.
std::string format_g9(double v);

/// Header x,y,z,response(,label); one row per point.
void write_response_csv(const std::string& path, const PointCloud& cloud,
                        const std::vector<double>& response);

/// Header epoch,loss,miou,seconds. Seconds are %.3f, everything else %.9g.
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& log);

/// Header x,y,z,f0..f{c-1},pred(,label); one row per point.
void write_features_csv(const std::string& path, const PointCloud& cloud,
                        const Eigen::MatrixXd& features, const std::vector<int>& predictions);

/// String-cell table used for ablation reports.
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_table_csv(const std::string& path, const TextTable& table);

/// Column-aligned rendering: first column left-aligned, the rest right.
std::string render_table(const TextTable& table);

}  // namespace hpc
