// Minimal CSV output. Reals use %.17g so reruns compare byte for byte.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mgdl/imaging_ops.hpp"

namespace mgdl {

inline std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path), os_(path) {
    if (!os_) throw IoError("cannot open '" + path + "' for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    if (!os_) throw IoError("write failed for '" + path_ + "'");
  }

  /// Mixed row builder: call cell() repeatedly, then end().
  CsvWriter& cell(double v) { return cell(fmt_real(v)); }
  CsvWriter& cell(std::size_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(const std::string& s) {
    pending_.push_back(s);
    return *this;
  }
  void end() {
    row(pending_);
    pending_.clear();
  }

 private:
  std::string path_;
  std::ofstream os_;
  std::vector<std::string> pending_;
};

}  // namespace mgdl
