// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hpc {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_response_csv(const std::string& path, const PointCloud& cloud,
                        const std::vector<double>& response) {
  if (response.size() != cloud.size()) {
    throw std::invalid_argument("write_response_csv: one response per point required");
  }
  std::ofstream out = open_out(path);
  out << (cloud.has_labels() ? "x,y,z,response,label\n" : "x,y,z,response\n");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    out << format_g9(p.x) << ',' << format_g9(p.y) << ',' << format_g9(p.z) << ','
        << format_g9(response[i]);
    if (cloud.has_labels()) out << ',' << cloud.labels[i];
    out << '\n';
  }
  finish(out, path);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& log) {
  std::ofstream out = open_out(path);
  out << "epoch,loss,miou,seconds\n";
  char seconds[32];
  for (const MetricRow& row : log) {
    std::snprintf(seconds, sizeof(seconds), "%.3f", row.seconds);
    out << row.epoch << ',' << format_g9(row.loss) << ',' << format_g9(row.miou) << ','
        << seconds << '\n';
  }
  finish(out, path);
}

void write_features_csv(const std::string& path, const PointCloud& cloud,
                        const Eigen::MatrixXd& features, const std::vector<int>& predictions) {
  if (static_cast<std::size_t>(features.rows()) != cloud.size() ||
      predictions.size() != cloud.size()) {
    throw std::invalid_argument("write_features_csv: rows must match the cloud");
  }
  std::ofstream out = open_out(path);
  out << "x,y,z";
  for (Eigen::Index c = 0; c < features.cols(); ++c) out << ",f" << c;
  out << (cloud.has_labels() ? ",pred,label\n" : ",pred\n");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    out << format_g9(p.x) << ',' << format_g9(p.y) << ',' << format_g9(p.z);
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      out << ',' << format_g9(features(static_cast<Eigen::Index>(i), c));
    }
    out << ',' << predictions[i];
    if (cloud.has_labels()) out << ',' << cloud.labels[i];
    out << '\n';
  }
  finish(out, path);
}

void write_table_csv(const std::string& path, const TextTable& table) {
  std::ofstream out = open_out(path);
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  finish(out, path);
}

std::string render_table(const TextTable& table) {
  std::vector<std::size_t> width(table.header.size(), 0);
  auto grow = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  };
  grow(table.header);
  for (const auto& row : table.rows) grow(row);

  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << "  ";
      const std::size_t w = i < width.size() ? width[i] : row[i].size();
      const std::string pad(w - row[i].size(), ' ');
      if (i == 0) {
        os << row[i] << pad;
      } else {
        os << pad << row[i];
      }
    }
    os << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return os.str();
}

}  // namespace hpc
