#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adma/errors.hpp"
#include "adma/math.hpp"

namespace adma {

inline double msfe(const Eigen::VectorXd& y, const Eigen::VectorXd& forecast) {
  if (y.size() != forecast.size()) throw validation_error("msfe: size mismatch");
  if (y.size() == 0) throw validation_error("msfe: empty sample");
  if (!y.allFinite() || !forecast.allFinite()) throw validation_error("msfe: non-finite values");
  return (y - forecast).squaredNorm() / static_cast<double>(y.size());
}

inline double msfe_ratio(double msfe_strategy, double msfe_benchmark) {
  if (!(msfe_benchmark > 0.0)) throw validation_error("msfe_ratio: benchmark MSFE must be positive");
  return msfe_strategy / msfe_benchmark;
}

// Expanding-window AR(1) forecasts. Entry i holds the forecast of y[i] from an
// intercept + first-lag regression fitted on y[0..i-1]; entries before
// min_window are NaN (not enough history, callers choose the padding rule).
// Near-singular windows (constant history) fall back to the window mean.
struct Ar1Result {
  Eigen::VectorXd forecast;
  std::int64_t fallback_count = 0;
};

inline Ar1Result ar1_recursive_forecast(const Eigen::VectorXd& y, int min_window = 20) {
  if (min_window < 3) throw validation_error("ar1_recursive_forecast: min_window must be >= 3");
  const auto T = y.size();
  if (T <= min_window)
    throw validation_error("ar1_recursive_forecast: series shorter than min_window");
  if (!y.allFinite()) throw validation_error("ar1_recursive_forecast: non-finite values");

  Ar1Result r;
  r.forecast = Eigen::VectorXd::Constant(T, kNaN);
  // Running sums over pairs (y[s-1], y[s]); extended by one pair per step.
  double sx = 0.0, sz = 0.0, sxx = 0.0, sxz = 0.0, sy = y[0];
  double n_pairs = 0.0;
  for (Eigen::Index i = 1; i < T; ++i) {
    // History now ends at y[i-1]; pairs use s = 1..i-1.
    if (i >= 2) {
      double xp = y[i - 2], zp = y[i - 1];
      sx += xp;
      sz += zp;
      sxx += xp * xp;
      sxz += xp * zp;
      n_pairs += 1.0;
    }
    if (i >= min_window) {
      double det = n_pairs * sxx - sx * sx;
      if (det > 1e-12 * std::max(1.0, n_pairs * sxx)) {
        double slope = (n_pairs * sxz - sx * sz) / det;
        double intercept = (sz - slope * sx) / n_pairs;
        r.forecast[i] = intercept + slope * y[i - 1];
      } else {
        r.forecast[i] = sy / static_cast<double>(i);
        ++r.fallback_count;
      }
    }
    sy += y[i];
  }
  return r;
}

// One-sided test that the alternative forecast improves on the benchmark in
// population, using the adjusted squared-error differential
//   f_t = e_b^2 - (e_a^2 - (b_t - a_t)^2).
// hac_lags = 0 uses the plain sample variance; hac_lags > 0 applies a
// Bartlett-kernel long-run variance with that many lags.
struct ClarkWestResult {
  double stat = 0.0;
  double p_value = 1.0;
  std::int64_t n = 0;
};

inline ClarkWestResult clark_west(const Eigen::VectorXd& y, const Eigen::VectorXd& benchmark,
                                  const Eigen::VectorXd& alternative, int hac_lags = 0) {
  const auto n = y.size();
  if (benchmark.size() != n || alternative.size() != n)
    throw validation_error("clark_west: size mismatch");
  if (n < 10) throw validation_error("clark_west: need at least 10 aligned forecasts");
  if (hac_lags < 0) throw validation_error("clark_west: negative lag count");
  if (!y.allFinite() || !benchmark.allFinite() || !alternative.allFinite())
    throw validation_error("clark_west: non-finite values");

  Eigen::VectorXd f(n);
  double max_abs = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    double eb = y[t] - benchmark[t];
    double ea = y[t] - alternative[t];
    double d = benchmark[t] - alternative[t];
    f[t] = eb * eb - (ea * ea - d * d);
    max_abs = std::max(max_abs, std::abs(f[t]));
  }
  if (max_abs == 0.0)
    throw numerical_error("clark_west: forecasts are identical (no difference to test)");

  double fbar = f.mean();
  Eigen::VectorXd centered = f.array() - fbar;
  double nv = static_cast<double>(n);
  double variance;
  if (hac_lags == 0) {
    variance = centered.squaredNorm() / (nv - 1.0);
  } else {
    variance = centered.squaredNorm() / nv;
    for (int j = 1; j <= hac_lags && j < n; ++j) {
      double gamma_j = 0.0;
      for (Eigen::Index t = j; t < n; ++t) gamma_j += centered[t] * centered[t - j];
      gamma_j /= nv;
      variance += 2.0 * (1.0 - static_cast<double>(j) / (hac_lags + 1.0)) * gamma_j;
    }
    if (variance < 0.0) variance = 0.0;
  }
  if (!(variance > 0.0))
    throw numerical_error("clark_west: zero variance of the loss differential");

  ClarkWestResult r;
  r.n = n;
  r.stat = fbar / std::sqrt(variance / nv);
  r.p_value = 1.0 - normal_cdf(r.stat);
  return r;
}

// Pointwise median and quartiles across replications; paths is reps x T.
struct PathSummary {
  Eigen::VectorXd median;
  Eigen::VectorXd q1;
  Eigen::VectorXd q3;
};

inline PathSummary lambda_path_summary(const Eigen::MatrixXd& paths) {
  if (paths.rows() == 0 || paths.cols() == 0)
    throw validation_error("lambda_path_summary: empty path matrix");
  PathSummary s;
  const auto T = paths.cols();
  s.median.resize(T);
  s.q1.resize(T);
  s.q3.resize(T);
  std::vector<double> col(paths.rows());
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index r = 0; r < paths.rows(); ++r) col[r] = paths(r, t);
    s.median[t] = quantile(col, 0.5);
    s.q1[t] = quantile(col, 0.25);
    s.q3[t] = quantile(col, 0.75);
  }
  return s;
}

// Aggregate backtest statistics keyed by strategy name.
struct EvalReport {
  std::map<std::string, double> msfe;
  std::map<std::string, double> msfe_ratio;          // vs benchmark, self included at 1
  std::map<std::string, ClarkWestResult> cw;          // vs benchmark, benchmark excluded
  std::map<std::string, std::string> errors;          // strategies that failed or were untestable
  std::string benchmark;
  std::int64_t n_forecasts = 0;
  std::int64_t burn_in = 0;
};

}  // namespace adma
