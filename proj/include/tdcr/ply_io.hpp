#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "tdcr/errors.hpp"
#include "tdcr/geometry.hpp"

namespace tdcr {

/// ASCII PLY writer. Vertex elements carry float x/y/z plus an optional
/// float `arclen` (normalized arc-length label). Values are written with
/// 9 significant digits; the stream is opened in binary mode so line
/// endings are LF on every platform.
inline void write_ply(const std::string& path, const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("write_ply: empty cloud");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  const bool labeled = cloud.has_arclen();
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (labeled) out << "property float arclen\n";
  out << "end_header\n";
  char buf[160];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    int len;
    if (labeled) {
      len = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g\n", p.x(),
                          p.y(), p.z(), cloud.arclen[i]);
    } else {
      len = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(),
                          p.z());
    }
    out.write(buf, len);
  }
  if (!out) throw IoError(path, "write failure");
}

inline PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  int lineno = 0;
  std::string line;
  auto fail = [&](const std::string& msg) {
    return IoError(path, "line " + std::to_string(lineno) + ": " + msg);
  };
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw fail("unexpected end of file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line();
  if (line != "ply") throw fail("not a PLY file");
  next_line();
  if (line != "format ascii 1.0") throw fail("unsupported PLY format");

  std::size_t count = 0;
  bool have_count = false;
  std::vector<std::string> props;
  for (;;) {
    next_line();
    if (line == "end_header") break;
    if (line.rfind("comment", 0) == 0) continue;
    if (line.rfind("element vertex ", 0) == 0) {
      count = std::strtoull(line.c_str() + 15, nullptr, 10);
      have_count = true;
    } else if (line.rfind("element ", 0) == 0) {
      throw fail("unsupported element: " + line);
    } else if (line.rfind("property float ", 0) == 0) {
      props.push_back(line.substr(15));
    } else {
      throw fail("unsupported header line: " + line);
    }
  }
  if (!have_count || count == 0) throw fail("missing vertex count");
  bool labeled = false;
  if (props == std::vector<std::string>{"x", "y", "z"}) {
    labeled = false;
  } else if (props == std::vector<std::string>{"x", "y", "z", "arclen"}) {
    labeled = true;
  } else {
    throw fail("unsupported property layout");
  }

  PointCloud cloud;
  cloud.points.reserve(count);
  if (labeled) cloud.arclen.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    next_line();
    const char* s = line.c_str();
    char* end = nullptr;
    double v[4];
    int want = labeled ? 4 : 3;
    for (int k = 0; k < want; ++k) {
      v[k] = std::strtod(s, &end);
      if (end == s) throw fail("malformed vertex line");
      s = end;
    }
    cloud.points.emplace_back(v[0], v[1], v[2]);
    if (labeled) cloud.arclen.push_back(v[3]);
  }
  return cloud;
}

}  // namespace tdcr
