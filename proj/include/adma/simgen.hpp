#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adma/dlm.hpp"
#include "adma/errors.hpp"
#include "adma/rng.hpp"

namespace adma {

// Generated regression series. Row t of X explains y[t]; theta_path row t is
// the coefficient vector in force at t. Draw order is pinned per time step so
// streams are reproducible from the documented generator recipe:
//   static/abrupt  d covariate normals, then 1 noise normal
//   drift          d covariate normals, d state-noise normals (t >= 2), 1 noise normal
//   three-regime   1 normal per step
struct SimSeries {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::MatrixXd theta_path;
  std::string kind;
  std::uint64_t seed = 0;
};

// Coefficient break: at time `time` (1-based) the whole coefficient vector is
// scaled by `multiplier`. Multipliers compound across breaks.
struct CoefBreak {
  int time = 0;
  double multiplier = 1.0;
};

inline SimSeries gen_abrupt(int T, const Eigen::VectorXd& theta0,
                            std::vector<CoefBreak> breaks, double noise_sd,
                            std::uint64_t seed) {
  if (T < 1) throw validation_error("gen_abrupt: T must be >= 1");
  if (theta0.size() == 0) throw validation_error("gen_abrupt: empty coefficient vector");
  if (!(noise_sd > 0.0)) throw validation_error("gen_abrupt: noise sd must be positive");
  std::sort(breaks.begin(), breaks.end(),
            [](const CoefBreak& a, const CoefBreak& b) { return a.time < b.time; });
  for (const auto& b : breaks)
    if (b.time < 2 || b.time > T)
      throw validation_error("gen_abrupt: break time " + std::to_string(b.time) +
                             " outside 2.." + std::to_string(T));

  const auto d = theta0.size();
  SimSeries s;
  s.X.resize(T, d);
  s.y.resize(T);
  s.theta_path.resize(T, d);
  s.kind = breaks.empty() ? "static" : "abrupt";
  s.seed = seed;

  Rng rng(seed);
  Eigen::VectorXd theta = theta0;
  std::size_t next_break = 0;
  for (int t = 1; t <= T; ++t) {
    while (next_break < breaks.size() && breaks[next_break].time == t) {
      theta *= breaks[next_break].multiplier;
      ++next_break;
    }
    Eigen::VectorXd x = rng.normal_vector(d);
    double eps = noise_sd * rng.normal();
    s.X.row(t - 1) = x.transpose();
    s.theta_path.row(t - 1) = theta.transpose();
    s.y[t - 1] = x.dot(theta) + eps;
  }
  return s;
}

inline SimSeries gen_static(int T, const Eigen::VectorXd& theta0, double noise_sd,
                            std::uint64_t seed) {
  return gen_abrupt(T, theta0, {}, noise_sd, seed);
}

namespace detail {

// Sample L z with L L' = W. LLT when W is positive definite; otherwise an
// eigendecomposition square root with negative eigenvalues clamped to zero.
inline Eigen::VectorXd sample_mvn(const Eigen::MatrixXd& W, Rng& rng) {
  Eigen::VectorXd z = rng.normal_vector(W.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (llt.info() == Eigen::Success) return llt.matrixL() * z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  if (es.info() != Eigen::Success) throw numerical_error("sample_mvn: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * z;
}

}  // namespace detail

// Random-walk coefficients whose innovation covariance is the one the
// discount filter itself implies: W_t = ((1 - lambda)/lambda) C_{t-1}, with
// C taken from a fixed-lambda filter run in lockstep on the emitted data.
// theta_1 = 0, so y_1 is pure noise and initializes the lockstep filter.
inline SimSeries gen_drift(int T, int d, double lambda_true, double g, double noise_sd,
                           std::uint64_t seed) {
  if (T < 1) throw validation_error("gen_drift: T must be >= 1");
  if (d < 1) throw validation_error("gen_drift: dimension must be >= 1");
  if (!(lambda_true > 0.0 && lambda_true <= 1.0))
    throw validation_error("gen_drift: lambda outside (0, 1]");
  if (!(g > 0.0)) throw validation_error("gen_drift: prior scale must be positive");
  if (!(noise_sd > 0.0)) throw validation_error("gen_drift: noise sd must be positive");

  SimSeries s;
  s.X.resize(T, d);
  s.y.resize(T);
  s.theta_path.resize(T, d);
  s.kind = "drift";
  s.seed = seed;

  Rng rng(seed);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd x = rng.normal_vector(d);
  double eps = noise_sd * rng.normal();
  s.X.row(0) = x.transpose();
  s.theta_path.row(0) = theta.transpose();
  s.y[0] = x.dot(theta) + eps;
  DlmState st = init_dlm(s.y[0], x, g);

  const double w_scale = (1.0 - lambda_true) / lambda_true;
  for (int t = 2; t <= T; ++t) {
    x = rng.normal_vector(d);
    Eigen::MatrixXd W = w_scale * st.C;
    theta += detail::sample_mvn(W, rng);
    eps = noise_sd * rng.normal();
    s.X.row(t - 1) = x.transpose();
    s.theta_path.row(t - 1) = theta.transpose();
    s.y[t - 1] = x.dot(theta) + eps;
    st = update(st, x, s.y[t - 1], lambda_true);
  }
  return s;
}

// Piecewise Gaussian regimes for the candidate-pool example. X is empty; the
// labels give the 0-based regime index of each observation.
struct Regime {
  double mean = 0.0;
  double variance = 1.0;
  int length = 0;
};

inline std::pair<SimSeries, std::vector<int>> gen_three_model(const std::vector<Regime>& regimes,
                                                              std::uint64_t seed) {
  if (regimes.empty()) throw validation_error("gen_three_model: no regimes");
  int T = 0;
  for (const auto& r : regimes) {
    if (r.length < 1) throw validation_error("gen_three_model: regime length must be >= 1");
    if (!(r.variance > 0.0)) throw validation_error("gen_three_model: variance must be positive");
    T += r.length;
  }
  SimSeries s;
  s.X.resize(T, 0);
  s.y.resize(T);
  s.theta_path.resize(T, 0);
  s.kind = "three-model";
  s.seed = seed;
  std::vector<int> labels(T);

  Rng rng(seed);
  int t = 0;
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    double sd = std::sqrt(regimes[r].variance);
    for (int i = 0; i < regimes[r].length; ++i, ++t) {
      s.y[t] = regimes[r].mean + sd * rng.normal();
      labels[t] = static_cast<int>(r);
    }
  }
  return {std::move(s), std::move(labels)};
}

}  // namespace adma
