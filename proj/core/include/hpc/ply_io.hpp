// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hpc/geometry.hpp"
#include "hpc/kernel_priors.hpp"

namespace hpc {

/// File parse failure; the message carries "path:line: reason" for header
/// errors and a length diagnosis for truncated bodies.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlyFormat { Ascii, BinaryLittleEndian };

struct PlyProperty {
  std::string type;  // scalar type name as written in the header
  std::string name;
  bool is_list = false;
  std::string list_count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeaderInfo {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<PlyElement> elements;
  std::vector<std::string> comments;

  const PlyElement* find(const std::string& name) const;
  std::size_t vertex_count() const;
};

/// Parses only the header. Throws ParseError with the offending line number.
PlyHeaderInfo read_ply_header(const std::string& path);

/// Reads a PLY point cloud (ascii or binary_little_endian). The vertex
/// element must carry scalar x/y/z; a scalar "label" property becomes labels;
/// any other scalar property becomes a feature column (declaration order).
/// Non-vertex elements and list properties are skipped. Truncated bodies and
/// malformed headers raise ParseError.
PointCloud read_ply(const std::string& path);

/// Writes points plus feature columns (as double properties, named) and
/// labels (as int "label"). ASCII uses 9 significant digits; binary stores
/// doubles bit-exactly.
void write_ply(const PointCloud& cloud, const std::string& path, PlyFormat format,
               const std::vector<std::string>& comments = {});

/// Response-map export: scalar "response" plus a viridis-mapped uchar RGB.
void write_response_ply(const PointCloud& cloud, const std::vector<double>& response,
                        const std::string& path, PlyFormat format);

/// Kernel priors travel as vertex-only PLY files tagged with a
/// "kernel_shape <name>" header comment. read_kernel_ply rejects files
/// without the tag.
void write_kernel_ply(const KernelPrior& kernel, const std::string& path, PlyFormat format);
KernelPrior read_kernel_ply(const std::string& path);

}  // namespace hpc
