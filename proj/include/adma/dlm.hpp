#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adma/errors.hpp"
#include "adma/math.hpp"

namespace adma {

// Degeneracy floors. S is the running observational variance estimate and
// must stay positive for the predictive density to exist; Q is the one-step
// predictive variance and is divided by in the gain and the density.
inline constexpr double kSFloor = 1e-12;
inline constexpr double kQFloor = 1e-12;

// Candidate model: which predictor columns (0-based, sorted ascending) enter
// the regression. The intercept is implicit and always occupies the first
// state coordinate after projection.
struct ModelSpec {
  std::vector<int> predictors;

  int dim() const { return static_cast<int>(predictors.size()) + 1; }

  bool contains(int predictor) const {
    for (int p : predictors)
      if (p == predictor) return true;
    return false;
  }
};

// Conjugate dynamic linear model state after observing t data points.
// n counts predictive degrees of freedom (t + 1 under the reference init).
struct DlmState {
  Eigen::VectorXd theta;  // posterior coefficient mean
  Eigen::MatrixXd C;      // posterior coefficient covariance scale
  double S = 0.0;         // observational variance estimate
  double n = 0.0;         // degrees of freedom
  std::int64_t t = 0;     // observations absorbed
};

// One-step-ahead predictive density: Student-t with `dof` degrees of freedom,
// location `mean`, squared scale `Q`.
struct PredictiveDensity {
  double mean = 0.0;
  double Q = 0.0;
  double dof = 0.0;
};

namespace detail {

inline void check_finite(const Eigen::VectorXd& x, const char* what) {
  if (!x.allFinite()) throw validation_error(std::string(what) + ": non-finite entries");
}

inline void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw validation_error("forgetting factor must lie in (0, 1], got " + std::to_string(lambda));
}

// Shared one-step update arithmetic. update() and the adaptive step both go
// through here so a zero-learning-rate adaptive run is bitwise identical to
// the plain fixed-lambda path.
struct KalmanCore {
  Eigen::VectorXd Cx;     // C_{t-1} x_t
  double Q = 0.0;         // predictive variance
  double mean = 0.0;      // predictive mean
  double eps = 0.0;       // forecast error
  double n_new = 0.0;
  double S_new = 0.0;
  Eigen::VectorXd A;      // adaptive gain
  Eigen::VectorXd theta_new;
  Eigen::MatrixXd C_new;
};

inline KalmanCore kalman_core(const DlmState& st, const Eigen::VectorXd& x, double y,
                              double lambda) {
  KalmanCore k;
  k.Cx = st.C * x;
  double xCx = x.dot(k.Cx);
  k.Q = xCx / lambda + st.S;
  if (!(k.Q >= kQFloor))
    throw numerical_error("predictive variance " + std::to_string(k.Q) +
                          " under floor: degenerate covariates");
  k.mean = x.dot(st.theta);
  k.eps = y - k.mean;
  k.n_new = st.n + 1.0;
  k.S_new = st.S + (st.S / k.n_new) * (k.eps * k.eps / k.Q - 1.0);
  if (k.S_new < kSFloor) k.S_new = kSFloor;
  k.A = k.Cx / (lambda * k.Q);
  k.theta_new = st.theta + k.A * k.eps;
  Eigen::MatrixXd C_new = st.C / lambda - k.A * k.A.transpose() * k.Q;
  k.C_new = 0.5 * (C_new + C_new.transpose());
  return k;
}

}  // namespace detail

// Reference initialization from the first observation under a g-prior scale:
// theta_hat_0 = 0, C_0 = g I, so the first update reduces to the closed form
// below. S starts at half the average of y1^2 and the standardized squared
// innovation, n at 2.
inline DlmState init_dlm(double y1, const Eigen::VectorXd& x1, double g) {
  if (x1.size() == 0) throw validation_error("init_dlm: empty covariate vector");
  detail::check_finite(x1, "init_dlm covariates");
  if (!std::isfinite(y1)) throw validation_error("init_dlm: non-finite response");
  if (!(g > 0.0)) throw validation_error("init_dlm: prior scale g must be positive");

  DlmState st;
  const auto d = x1.size();
  Eigen::MatrixXd C0 = g * Eigen::MatrixXd::Identity(d, d);
  double Q1 = x1.dot(C0 * x1);
  if (!(Q1 >= kQFloor)) throw numerical_error("init_dlm: zero covariates give degenerate Q");
  Eigen::VectorXd A1 = C0 * x1 / Q1;
  double eps1 = y1;  // prior mean is zero
  st.theta = A1 * eps1;
  st.C = C0;
  st.S = 0.5 * (y1 * y1 + eps1 * eps1 / Q1);
  if (st.S < kSFloor) st.S = kSFloor;
  st.n = 2.0;
  st.t = 1;
  return st;
}

// One-step-ahead predictive density before observing y. lambda discounts the
// coefficient covariance: Q = x' C x / lambda + S.
inline PredictiveDensity predict(const DlmState& st, const Eigen::VectorXd& x, double lambda) {
  if (x.size() != st.theta.size())
    throw validation_error("predict: covariate dimension " + std::to_string(x.size()) +
                           " does not match state dimension " + std::to_string(st.theta.size()));
  detail::check_finite(x, "predict covariates");
  detail::check_lambda(lambda);
  Eigen::VectorXd Cx = st.C * x;
  double xCx = x.dot(Cx);
  PredictiveDensity pd;
  pd.mean = x.dot(st.theta);
  pd.Q = xCx / lambda + st.S;
  pd.dof = st.n;
  return pd;
}

// Log density of the location-scale Student-t predictive at y.
inline double predictive_log_density(const PredictiveDensity& pd, double y) {
  if (!(pd.Q >= kQFloor)) throw numerical_error("predictive_log_density: variance under floor");
  if (!(pd.dof >= 1.0)) throw validation_error("predictive_log_density: dof must be >= 1");
  if (!std::isfinite(y)) throw validation_error("predictive_log_density: non-finite y");
  double nu = pd.dof;
  double z2 = (y - pd.mean) * (y - pd.mean) / pd.Q;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
         0.5 * std::log(pd.Q) - 0.5 * (nu + 1.0) * std::log1p(z2 / nu);
}

// Absorb observation y: Kalman gain step on the discounted prior, then the
// recursive variance estimate update. Setting lambda = 1 recovers the static
// (zero state noise) model exactly.
inline DlmState update(const DlmState& st, const Eigen::VectorXd& x, double y, double lambda) {
  if (x.size() != st.theta.size()) throw validation_error("update: covariate dimension mismatch");
  detail::check_finite(x, "update covariates");
  if (!std::isfinite(y)) throw validation_error("update: non-finite response");
  detail::check_lambda(lambda);

  detail::KalmanCore k = detail::kalman_core(st, x, y, lambda);
  DlmState out;
  out.theta = std::move(k.theta_new);
  out.C = std::move(k.C_new);
  out.S = k.S_new;
  out.n = k.n_new;
  out.t = st.t + 1;
  return out;
}

// Fixed-lambda filter over a whole series. Row t of X is the covariate vector
// for y[t]. Outputs are aligned with time: entry 0 (the initializing
// observation) carries no forecast and is NaN.
struct DlmRun {
  Eigen::VectorXd forecast;   // predictive means
  Eigen::VectorXd error;      // y - forecast
  Eigen::VectorXd variance;   // predictive variances
  DlmState final_state;
};

inline DlmRun run_dlm_fixed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double g,
                            double lambda) {
  if (X.rows() != y.size()) throw validation_error("run_dlm_fixed: X rows must match y length");
  if (X.rows() < 1) throw validation_error("run_dlm_fixed: empty series");
  const auto T = X.rows();
  DlmRun run;
  run.forecast = Eigen::VectorXd::Constant(T, kNaN);
  run.error = Eigen::VectorXd::Constant(T, kNaN);
  run.variance = Eigen::VectorXd::Constant(T, kNaN);
  DlmState st = init_dlm(y[0], X.row(0).transpose(), g);
  for (Eigen::Index t = 1; t < T; ++t) {
    Eigen::VectorXd x = X.row(t).transpose();
    PredictiveDensity pd = predict(st, x, lambda);
    run.forecast[t] = pd.mean;
    run.error[t] = y[t] - pd.mean;
    run.variance[t] = pd.Q;
    st = update(st, x, y[t], lambda);
  }
  run.final_state = std::move(st);
  return run;
}

}  // namespace adma
