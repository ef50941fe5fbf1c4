#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adma/errors.hpp"

namespace adma {

// Shortest decimal string that parses back to exactly the same double, so
// written files are lossless and byte-stable across runs.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw numerical_error("fmt_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string fmt_int(std::int64_t v) { return std::to_string(v); }

// Column-oriented CSV sink. An optional '#'-prefixed provenance line (the
// run configuration) precedes the header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& comment,
            const std::vector<std::string>& columns)
      : out_(path), ncols_(columns.size()) {
    if (!out_) throw validation_error("cannot open for writing: " + path.string());
    if (!comment.empty()) out_ << "# " << comment << "\n";
    write_cells(columns);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != ncols_)
      throw validation_error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(ncols_));
    write_cells(cells);
  }

  void close() { out_.close(); }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t ncols_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path.string());
  out << text;
}

}  // namespace adma
