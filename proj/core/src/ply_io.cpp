// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/ply_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hpc/colormap.hpp"

namespace hpc {

namespace {

struct ScalarType {
  const char* name;
  int size;
  bool integral;
};

constexpr std::array<ScalarType, 16> kScalarTypes{{
    {"char", 1, true},
    {"int8", 1, true},
    {"uchar", 1, true},
    {"uint8", 1, true},
    {"short", 2, true},
    {"int16", 2, true},
    {"ushort", 2, true},
    {"uint16", 2, true},
    {"int", 4, true},
    {"int32", 4, true},
    {"uint", 4, true},
    {"uint32", 4, true},
    {"float", 4, false},
    {"float32", 4, false},
    {"double", 8, false},
    {"float64", 8, false},
}};

const ScalarType* scalar_type(const std::string& name) {
  for (const auto& t : kScalarTypes) {
    if (name == t.name) return &t;
  }
  return nullptr;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& why) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + why);
}

double decode_scalar(const unsigned char* p, const ScalarType& t) {
  auto as = [&]<typename T>() {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (!t.integral) return t.size == 4 ? as.operator()<float>() : as.operator()<double>();
  switch (t.size) {
    case 1:
      return t.name[0] == 'u' ? as.operator()<std::uint8_t>() : as.operator()<std::int8_t>();
    case 2:
      return t.name[0] == 'u' ? as.operator()<std::uint16_t>() : as.operator()<std::int16_t>();
    default:
      return t.name[0] == 'u' ? as.operator()<std::uint32_t>() : as.operator()<std::int32_t>();
  }
}

// Little-endian emit helpers; files are defined little-endian regardless of host.
void put_bytes(std::ostream& os, const void* src, int size) {
  static_assert(std::endian::native == std::endian::little,
                "byte-swapping writer not implemented for big-endian hosts");
  os.write(static_cast<const char*>(src), size);
}
void put_f64(std::ostream& os, double v) { put_bytes(os, &v, 8); }
void put_i32(std::ostream& os, std::int32_t v) { put_bytes(os, &v, 4); }
void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

const PlyElement* PlyHeaderInfo::find(const std::string& name) const {
  for (const auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t PlyHeaderInfo::vertex_count() const {
  const PlyElement* v = find("vertex");
  return v ? v->count : 0;
}

namespace {

struct HeaderParse {
  PlyHeaderInfo info;
  std::size_t lines = 0;  // header line count including end_header
};

HeaderParse parse_header(std::istream& in, const std::string& path) {
  HeaderParse hp;
  std::string line;
  std::size_t lineno = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
    return true;
  };

  if (!next_line() || line != "ply") fail(path, 1, "not a PLY file (missing 'ply' magic)");
  bool have_format = false;
  bool ended = false;
  while (next_line()) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok.empty()) continue;
    if (tok == "comment" || tok == "obj_info") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
      hp.info.comments.push_back(rest);
    } else if (tok == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        hp.info.format = PlyFormat::Ascii;
      } else if (fmt == "binary_little_endian") {
        hp.info.format = PlyFormat::BinaryLittleEndian;
      } else if (fmt == "binary_big_endian") {
        fail(path, lineno, "unsupported format 'binary_big_endian'");
      } else {
        fail(path, lineno, "unrecognized format '" + fmt + "'");
      }
      if (version != "1.0") fail(path, lineno, "unsupported PLY version '" + version + "'");
      have_format = true;
    } else if (tok == "element") {
      PlyElement el;
      long long count = -1;
      if (!(ls >> el.name >> count) || count < 0) {
        fail(path, lineno, "malformed element declaration");
      }
      el.count = static_cast<std::size_t>(count);
      hp.info.elements.push_back(std::move(el));
    } else if (tok == "property") {
      if (hp.info.elements.empty()) fail(path, lineno, "property before any element");
      PlyProperty prop;
      std::string t1;
      ls >> t1;
      if (t1 == "list") {
        prop.is_list = true;
        if (!(ls >> prop.list_count_type >> prop.type >> prop.name)) {
          fail(path, lineno, "malformed list property");
        }
        if (!scalar_type(prop.list_count_type) || !scalar_type(prop.type)) {
          fail(path, lineno, "unknown type in list property");
        }
      } else {
        prop.type = t1;
        if (!scalar_type(prop.type)) fail(path, lineno, "unknown property type '" + t1 + "'");
        if (!(ls >> prop.name)) fail(path, lineno, "property missing a name");
      }
      hp.info.elements.back().properties.push_back(std::move(prop));
    } else if (tok == "end_header") {
      ended = true;
      break;
    } else {
      fail(path, lineno, "unrecognized header keyword '" + tok + "'");
    }
  }
  if (!ended) fail(path, lineno + 1, "header ended without end_header");
  if (!have_format) fail(path, lineno, "header is missing a format line");
  hp.lines = lineno;
  return hp;
}

}  // namespace

PlyHeaderInfo read_ply_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_header(in, path).info;
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  const HeaderParse hp = parse_header(in, path);
  const PlyHeaderInfo& info = hp.info;

  const PlyElement* vertex = info.find("vertex");
  if (!vertex) throw ParseError(path + ": no vertex element");

  // Column roles inside the vertex element.
  int ix = -1, iy = -1, iz = -1, ilabel = -1;
  std::vector<int> feature_props;
  for (int p = 0; p < static_cast<int>(vertex->properties.size()); ++p) {
    const auto& prop = vertex->properties[p];
    if (prop.is_list) continue;  // skipped, not representable as a column
    if (prop.name == "x") {
      ix = p;
    } else if (prop.name == "y") {
      iy = p;
    } else if (prop.name == "z") {
      iz = p;
    } else if (prop.name == "label" && scalar_type(prop.type)->integral) {
      ilabel = p;
    } else {
      feature_props.push_back(p);
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw ParseError(path + ": vertex element lacks scalar x/y/z properties");
  }

  PointCloud cloud;
  cloud.points.reserve(vertex->count);
  if (ilabel >= 0) cloud.labels.reserve(vertex->count);
  if (!feature_props.empty()) {
    cloud.features.resize(static_cast<Eigen::Index>(vertex->count), feature_props.size());
    for (int p : feature_props) cloud.feature_names.push_back(vertex->properties[p].name);
  }

  std::size_t lineno = hp.lines;  // body diagnostics continue the header count
  std::vector<double> row;

  auto consume_vertex_row = [&](const std::vector<double>& values) {
    cloud.points.push_back({values[ix], values[iy], values[iz]});
    if (ilabel >= 0) {
      cloud.labels.push_back(static_cast<int>(values[ilabel]));
    }
    for (int k = 0; k < static_cast<int>(feature_props.size()); ++k) {
      cloud.features(static_cast<Eigen::Index>(cloud.points.size()) - 1, k) =
          values[feature_props[k]];
    }
  };

  if (info.format == PlyFormat::Ascii) {
    for (const auto& el : info.elements) {
      const bool is_vertex = &el == vertex;
      for (std::size_t r = 0; r < el.count; ++r) {
        std::string body_line;
        if (!std::getline(in, body_line)) {
          throw ParseError(path + ": body ended after " + std::to_string(r) + " of " +
                           std::to_string(el.count) + " '" + el.name + "' rows (length mismatch)");
        }
        ++lineno;
        std::istringstream ls(body_line);
        row.clear();
        for (const auto& prop : el.properties) {
          if (prop.is_list) {
            long long cnt;
            if (!(ls >> cnt) || cnt < 0) fail(path, lineno, "malformed list count");
            double dump;
            for (long long i = 0; i < cnt; ++i) {
              if (!(ls >> dump)) fail(path, lineno, "list shorter than declared");
            }
            row.push_back(0.0);
          } else {
            double v;
            if (!(ls >> v)) fail(path, lineno, "row has fewer values than properties");
            row.push_back(v);
          }
        }
        if (is_vertex) consume_vertex_row(row);
      }
    }
  } else {
    std::vector<unsigned char> buf;
    for (const auto& el : info.elements) {
      const bool is_vertex = &el == vertex;
      for (std::size_t r = 0; r < el.count; ++r) {
        row.clear();
        for (const auto& prop : el.properties) {
          if (prop.is_list) {
            const ScalarType* ct = scalar_type(prop.list_count_type);
            buf.resize(ct->size);
            if (!in.read(reinterpret_cast<char*>(buf.data()), ct->size)) {
              throw ParseError(path + ": body ended inside '" + el.name +
                               "' row " + std::to_string(r) + " (length mismatch)");
            }
            const auto cnt = static_cast<std::size_t>(decode_scalar(buf.data(), *ct));
            const ScalarType* it = scalar_type(prop.type);
            buf.resize(cnt * it->size);
            if (cnt > 0 && !in.read(reinterpret_cast<char*>(buf.data()),
                                    static_cast<std::streamsize>(cnt * it->size))) {
              throw ParseError(path + ": body ended inside '" + el.name +
                               "' row " + std::to_string(r) + " (length mismatch)");
            }
            row.push_back(0.0);
          } else {
            const ScalarType* t = scalar_type(prop.type);
            buf.resize(t->size);
            if (!in.read(reinterpret_cast<char*>(buf.data()), t->size)) {
              throw ParseError(path + ": body ended after " + std::to_string(r) + " of " +
                               std::to_string(el.count) + " '" + el.name +
                               "' rows (length mismatch)");
            }
            row.push_back(decode_scalar(buf.data(), *t));
          }
        }
        if (is_vertex) consume_vertex_row(row);
      }
    }
  }
  if (cloud.points.size() != vertex->count) {
    throw ParseError(path + ": vertex count mismatch");
  }
  return cloud;
}

namespace {

void write_header(std::ostream& os, const PointCloud& cloud, PlyFormat format,
                  const std::vector<std::string>& comments,
                  const std::vector<std::string>& feature_names, bool with_label) {
  os << "ply\n";
  os << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n");
  for (const auto& c : comments) os << "comment " << c << "\n";
  os << "element vertex " << cloud.size() << "\n";
  os << "property double x\nproperty double y\nproperty double z\n";
  for (const auto& name : feature_names) os << "property double " << name << "\n";
  if (with_label) os << "property int label\n";
  os << "end_header\n";
}

std::vector<std::string> effective_feature_names(const PointCloud& cloud) {
  const int c = cloud.has_features() ? static_cast<int>(cloud.features.cols()) : 0;
  std::vector<std::string> names = cloud.feature_names;
  names.resize(c);
  for (int k = 0; k < c; ++k) {
    if (names[k].empty()) names[k] = "f" + std::to_string(k);
  }
  return names;
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::string& path, PlyFormat format,
               const std::vector<std::string>& comments) {
  validate_cloud(cloud);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  const auto names = effective_feature_names(cloud);
  const int c = static_cast<int>(names.size());
  write_header(os, cloud, format, comments, names, cloud.has_labels());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (format == PlyFormat::Ascii) {
      os << format_g9(p.x) << ' ' << format_g9(p.y) << ' ' << format_g9(p.z);
      for (int k = 0; k < c; ++k) {
        os << ' ' << format_g9(cloud.features(static_cast<Eigen::Index>(i), k));
      }
      if (cloud.has_labels()) os << ' ' << cloud.labels[i];
      os << '\n';
    } else {
      put_f64(os, p.x);
      put_f64(os, p.y);
      put_f64(os, p.z);
      for (int k = 0; k < c; ++k) put_f64(os, cloud.features(static_cast<Eigen::Index>(i), k));
      if (cloud.has_labels()) put_i32(os, cloud.labels[i]);
    }
  }
  if (!os) throw std::runtime_error("short write to '" + path + "'");
}

void write_response_ply(const PointCloud& cloud, const std::vector<double>& response,
                        const std::string& path, PlyFormat format) {
  validate_cloud(cloud);
  if (response.size() != cloud.size()) {
    throw std::invalid_argument("response size does not match cloud");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");

  os << "ply\n";
  os << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n");
  os << "element vertex " << cloud.size() << "\n";
  os << "property double x\nproperty double y\nproperty double z\n";
  os << "property double response\n";
  os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "end_header\n";

  double lo = 0.0, hi = 1.0;  // responses live in [0, 1]; widen if they escape
  for (double v : response) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const auto rgb = viridis((response[i] - lo) / (hi - lo));
    if (format == PlyFormat::Ascii) {
      os << format_g9(p.x) << ' ' << format_g9(p.y) << ' ' << format_g9(p.z) << ' '
         << format_g9(response[i]) << ' ' << static_cast<int>(rgb[0]) << ' '
         << static_cast<int>(rgb[1]) << ' ' << static_cast<int>(rgb[2]) << '\n';
    } else {
      put_f64(os, p.x);
      put_f64(os, p.y);
      put_f64(os, p.z);
      put_f64(os, response[i]);
      put_u8(os, rgb[0]);
      put_u8(os, rgb[1]);
      put_u8(os, rgb[2]);
    }
  }
  if (!os) throw std::runtime_error("short write to '" + path + "'");
}

void write_kernel_ply(const KernelPrior& kernel, const std::string& path, PlyFormat format) {
  if (kernel.points.empty()) throw std::invalid_argument("write_kernel_ply: empty kernel");
  PointCloud cloud;
  cloud.points = kernel.points;
  write_ply(cloud, path, format, {std::string("kernel_shape ") + to_string(kernel.shape)});
}

KernelPrior read_kernel_ply(const std::string& path) {
  const PlyHeaderInfo header = read_ply_header(path);
  std::string shape_name;
  for (const std::string& comment : header.comments) {
    if (comment.rfind("kernel_shape ", 0) == 0) {
      shape_name = comment.substr(13);
      break;
    }
  }
  if (shape_name.empty()) {
    throw ParseError(path + ": missing kernel_shape comment, not a kernel file");
  }
  KernelPrior kernel;
  kernel.shape = kernel_shape_from_string(shape_name);
  kernel.points = read_ply(path).points;
  if (kernel.points.empty()) throw ParseError(path + ": kernel file has no points");
  return kernel;
}

}  // namespace hpc
