// Deterministic text output: shortest round-trip float formatting via
// "%.17g", a small CSV writer with fixed '\n' line endings, and an FNV-1a
// hash for byte-identity checks across reruns.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qwl/errors.hpp"

namespace qwl {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : ncols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) body_ += ',';
      body_ += header[i];
    }
    body_ += '\n';
  }

  // Free-form comment/metadata line, written verbatim before later rows.
  void raw_line(const std::string& line) {
    body_ += line;
    body_ += '\n';
  }

  void row(const std::vector<double>& vals) {
    if (vals.size() != ncols_) throw IoError("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) body_ += ',';
      body_ += fmt17(vals[i]);
    }
    body_ += '\n';
  }

  const std::string& str() const { return body_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out.write(body_.data(), static_cast<std::streamsize>(body_.size()));
    if (!out) throw IoError("short write: " + path);
  }

 private:
  std::size_t ncols_;
  std::string body_;
};

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace qwl
