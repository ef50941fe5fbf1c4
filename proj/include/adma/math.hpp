#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "adma/errors.hpp"

namespace adma {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(exp(a) + exp(b)) without overflow; tolerates -inf in either argument.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log sum_i exp(v_i); returns -inf for an all -inf input.
inline double log_sum_exp(const Eigen::VectorXd& v) {
  double hi = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) hi = std::max(hi, v[i]);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - hi);
  return hi + std::log(acc);
}

inline double gaussian_log_density(double y, double mean, double variance) {
  if (!(variance > 0.0)) throw validation_error("gaussian_log_density: variance must be positive");
  double z = y - mean;
  return -0.5 * (std::log(2.0 * M_PI * variance) + z * z / variance);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Linear-interpolation quantile on a copy of the data (R type 7). p in [0,1].
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw validation_error("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw validation_error("quantile: p outside [0,1]");
  std::sort(v.begin(), v.end());
  double idx = p * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(idx);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = idx - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace adma
