#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "adma/errors.hpp"

namespace adma {

// In-memory regression dataset: row i of X explains y[i].
struct Dataset {
  std::vector<std::string> time;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

struct CsvOptions {
  std::string response = "y";
  // When set, predictors are shifted one step so that row t pairs y[t] with
  // the predictor values observed at t-1; the first row is dropped.
  bool lag_predictors = false;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  auto fail = [&](const char* what) {
    throw validation_error("csv row " + std::to_string(row) + ", column '" + col + "': " + what +
                           " '" + cell + "'");
  };
  if (cell.empty()) fail("empty cell");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE) fail("cannot parse number");
  if (!std::isfinite(v)) fail("non-finite value");
  return v;
}

}  // namespace detail

// Plain comma-separated file: a header row, a leading time-label column, one
// response column located by name, every other column a predictor. Lines
// starting with '#' are skipped (generated files carry their configuration
// there). No quoting support; labels must not contain commas.
inline Dataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open csv file: " + path);

  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.size() < 2)
    throw validation_error("csv " + path + ": need a time column and at least one data column");

  int response_col = -1;
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] == opts.response) {
      if (response_col >= 0)
        throw validation_error("csv " + path + ": duplicate response column '" + opts.response + "'");
      response_col = static_cast<int>(j);
    }
  if (response_col < 0)
    throw validation_error("csv " + path + ": response column '" + opts.response + "' not found");

  Dataset ds;
  ds.response_name = opts.response;
  for (std::size_t j = 1; j < header.size(); ++j)
    if (static_cast<int>(j) != response_col) ds.predictor_names.push_back(header[j]);

  std::vector<double> ys;
  std::vector<double> xs;  // row major
  std::unordered_set<std::string> seen_labels;
  const std::size_t ncols = header.size();
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != ncols)
      throw validation_error("csv " + path + " line " + std::to_string(lineno) + ": expected " +
                             std::to_string(ncols) + " cells, got " + std::to_string(cells.size()));
    ++data_row;
    if (!seen_labels.insert(cells[0]).second)
      throw validation_error("csv " + path + ": duplicate time label '" + cells[0] + "'");
    ds.time.push_back(cells[0]);
    for (std::size_t j = 1; j < ncols; ++j) {
      double v = detail::parse_cell(cells[j], data_row, header[j]);
      if (static_cast<int>(j) == response_col)
        ys.push_back(v);
      else
        xs.push_back(v);
    }
  }
  if (ds.time.empty()) throw validation_error("csv " + path + ": no data rows");

  // Numeric labels must be strictly increasing; other label types are taken
  // in file order (uniqueness already enforced).
  bool all_numeric = true;
  std::vector<double> tvals(ds.time.size());
  for (std::size_t i = 0; i < ds.time.size() && all_numeric; ++i) {
    char* end = nullptr;
    tvals[i] = std::strtod(ds.time[i].c_str(), &end);
    all_numeric = end == ds.time[i].c_str() + ds.time[i].size() && !ds.time[i].empty();
  }
  if (all_numeric)
    for (std::size_t i = 1; i < tvals.size(); ++i)
      if (!(tvals[i] > tvals[i - 1]))
        throw validation_error("csv " + path + ": time labels not strictly increasing at '" +
                               ds.time[i] + "'");

  const auto T = static_cast<Eigen::Index>(ds.time.size());
  const auto D = static_cast<Eigen::Index>(ds.predictor_names.size());
  ds.y = Eigen::Map<Eigen::VectorXd>(ys.data(), T);
  ds.X.resize(T, D);
  for (Eigen::Index i = 0; i < T; ++i)
    for (Eigen::Index j = 0; j < D; ++j) ds.X(i, j) = xs[static_cast<std::size_t>(i * D + j)];

  if (opts.lag_predictors) {
    if (T < 2) throw validation_error("csv " + path + ": lagging needs at least two rows");
    Dataset lagged;
    lagged.response_name = ds.response_name;
    lagged.predictor_names = ds.predictor_names;
    lagged.time.assign(ds.time.begin() + 1, ds.time.end());
    lagged.y = ds.y.tail(T - 1);
    lagged.X = ds.X.topRows(T - 1);
    return lagged;
  }
  return ds;
}

}  // namespace adma
