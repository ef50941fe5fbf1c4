#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "adma/dlm.hpp"
#include "adma/errors.hpp"

namespace adma {

// Hyperparameters for the per-model forgetting-factor tuner. The short
// 0.8 moment horizons follow the tuned defaults for this filter; lambda is
// clamped to [lambda_min, lambda_max] after every step.
struct AdamConfig {
  double gamma = 5e-3;
  double beta1 = 0.8;
  double beta2 = 0.8;
  double epsilon = 1e-8;
  double lambda_init = 0.99;
  double lambda_min = 0.9;
  double lambda_max = 0.999;
};

struct AdamState {
  double m = 0.0;
  double v = 0.0;
  std::int64_t step = 0;  // bias-correction exponent of the next call is step + 1
};

inline void validate_adam_config(const AdamConfig& c) {
  if (!(c.gamma >= 0.0)) throw validation_error("adam: learning rate must be >= 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0))
    throw validation_error("adam: moment decays must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) throw validation_error("adam: epsilon must be positive");
  if (!(c.lambda_min > 0.0 && c.lambda_min <= c.lambda_init &&
        c.lambda_init <= c.lambda_max && c.lambda_max <= 1.0))
    throw validation_error("adam: need 0 < lambda_min <= lambda_init <= lambda_max <= 1");
}

// One gradient-descent step on lambda with bias-corrected moments:
// lambda' = clamp(lambda - gamma * m_hat / (sqrt(v_hat) + epsilon)).
inline std::pair<AdamState, double> adam_step(AdamState st, const AdamConfig& cfg,
                                              double gradient, double lambda) {
  if (!std::isfinite(gradient)) throw validation_error("adam_step: non-finite gradient");
  st.step += 1;
  st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * gradient;
  st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * gradient * gradient;
  double t = static_cast<double>(st.step);
  double denom =
      (1.0 - std::pow(cfg.beta1, t)) * (std::sqrt(st.v / (1.0 - std::pow(cfg.beta2, t))) + cfg.epsilon);
  double lam = lambda - cfg.gamma * st.m / denom;
  lam = std::clamp(lam, cfg.lambda_min, cfg.lambda_max);
  return {st, lam};
}

// Sensitivity state of the filter with respect to lambda, carried alongside
// DlmState. All derivatives treat lambda as the constant used on every past
// step, which is what a pair of complete fixed-lambda filter runs at
// lambda +/- h differentiates.
struct AfState {
  Eigen::VectorXd dtheta;
  Eigen::MatrixXd dC;
  double dS = 0.0;
  double lambda = 0.99;
  AdamState adam;
  AdamConfig config;
};

// Derivatives start at zero: the initialization does not involve lambda, so
// the first nonzero gradient appears on the second post-init observation.
// The moment accumulators are seeded at step 1 to line up the bias-correction
// exponent with the time index of each observation.
inline AfState init_af(Eigen::Index dim, const AdamConfig& cfg = {}) {
  validate_adam_config(cfg);
  if (dim <= 0) throw validation_error("init_af: dimension must be positive");
  AfState af;
  af.dtheta = Eigen::VectorXd::Zero(dim);
  af.dC = Eigen::MatrixXd::Zero(dim, dim);
  af.dS = 0.0;
  af.lambda = cfg.lambda_init;
  af.adam = AdamState{0.0, 0.0, 1};
  af.config = cfg;
  return af;
}

// d/dlambda of the one-step squared forecast loss J = eps^2 / 2:
// dJ = -eps * x' dtheta.
inline double grad_forecast_error(const AfState& af, const Eigen::VectorXd& x, double eps) {
  if (x.size() != af.dtheta.size())
    throw validation_error("grad_forecast_error: dimension mismatch");
  return -eps * x.dot(af.dtheta);
}

// Quantities the state update already computed that the derivative recursion
// reuses.
struct KalmanIntermediates {
  double Q = 0.0;
  Eigen::VectorXd A;
  double eps_hat = 0.0;
};

// Advance (dtheta, dC, dS) one observation using the pre-update state. Chain
// rule through the gain, the predictive variance and the variance estimate;
// dC is symmetrized the same way C is.
inline AfState update_derivatives(const AfState& af, const DlmState& pre_state,
                                  const Eigen::VectorXd& x, const KalmanIntermediates& im) {
  if (x.size() != af.dtheta.size() || pre_state.theta.size() != af.dtheta.size())
    throw validation_error("update_derivatives: dimension mismatch");
  if (!(im.Q >= kQFloor)) throw numerical_error("update_derivatives: predictive variance under floor");

  const double lam = af.lambda;
  const double Q = im.Q;
  const double eps = im.eps_hat;
  const double n_new = pre_state.n + 1.0;

  Eigen::VectorXd Cx = pre_state.C * x;
  double xCx = x.dot(Cx);
  Eigen::VectorXd dCx = af.dC * x;
  double xdCx = x.dot(dCx);
  double xt_dtheta = x.dot(af.dtheta);

  double dQ = xdCx / lam - xCx / (lam * lam) + af.dS;
  Eigen::VectorXd dA = dCx / (lam * Q) - im.A * (1.0 / lam + dQ / Q);

  AfState out = af;
  out.dS = af.dS + (af.dS * (eps * eps - Q) -
                    pre_state.S * (2.0 * eps * xt_dtheta + (eps * eps / Q) * dQ)) /
                       (n_new * Q);
  out.dtheta = af.dtheta + eps * dA - xt_dtheta * im.A;
  // dC' = (I - A x') dC / lam - (I + lam dA x' - A x') C / lam^2, written with
  // rank-one products; C and dC symmetry turns x' dC into (dC x)'.
  Eigen::MatrixXd M = af.dC / lam - im.A * (dCx.transpose() / lam) -
                      pre_state.C / (lam * lam) - dA * (Cx.transpose() / lam) +
                      im.A * (Cx.transpose() / (lam * lam));
  out.dC = 0.5 * (M + M.transpose());
  return out;
}

struct AfStepResult {
  DlmState state;
  AfState af;
  PredictiveDensity density;  // computed before y was revealed
  double forecast_error = 0.0;
  double gradient = 0.0;
};

// Full adaptive step: filter update at the current lambda, derivative
// recursion, then one tuner step on lambda. With gamma = 0 the state path is
// bitwise identical to update() at fixed lambda.
inline AfStepResult af_step(const DlmState& st, const AfState& af, const Eigen::VectorXd& x,
                            double y) {
  if (x.size() != st.theta.size() || af.dtheta.size() != st.theta.size())
    throw validation_error("af_step: dimension mismatch");
  detail::check_finite(x, "af_step covariates");
  if (!std::isfinite(y)) throw validation_error("af_step: non-finite response");
  detail::check_lambda(af.lambda);

  detail::KalmanCore k = detail::kalman_core(st, x, y, af.lambda);

  AfStepResult r;
  r.density = PredictiveDensity{k.mean, k.Q, st.n};
  r.forecast_error = k.eps;
  r.gradient = grad_forecast_error(af, x, k.eps);

  KalmanIntermediates im{k.Q, k.A, k.eps};
  r.af = update_derivatives(af, st, x, im);

  r.state.theta = std::move(k.theta_new);
  r.state.C = std::move(k.C_new);
  r.state.S = k.S_new;
  r.state.n = k.n_new;
  r.state.t = st.t + 1;

  auto [adam, lam] = adam_step(r.af.adam, af.config, r.gradient, af.lambda);
  r.af.adam = adam;
  r.af.lambda = lam;
  return r;
}

// Adaptive filter over a whole series; row t of X explains y[t]. Entry 0 of
// the per-step outputs corresponds to the initializing observation (no
// forecast, lambda at its initial value).
struct AfRun {
  Eigen::VectorXd lambda_path;  // lambda after each step's tuner update
  Eigen::VectorXd gradient;
  Eigen::VectorXd forecast;
  Eigen::VectorXd error;
  Eigen::MatrixXd theta_path;   // row t: posterior mean after observing t+1 points
  DlmState final_state;
  AfState final_af;
};

inline AfRun run_af_dlm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double g,
                        const AdamConfig& cfg = {}) {
  if (X.rows() != y.size()) throw validation_error("run_af_dlm: X rows must match y length");
  if (X.rows() < 1) throw validation_error("run_af_dlm: empty series");
  const auto T = X.rows();
  AfRun run;
  run.lambda_path = Eigen::VectorXd::Constant(T, cfg.lambda_init);
  run.gradient = Eigen::VectorXd::Zero(T);
  run.forecast = Eigen::VectorXd::Constant(T, kNaN);
  run.error = Eigen::VectorXd::Constant(T, kNaN);
  run.theta_path = Eigen::MatrixXd::Zero(T, X.cols());

  DlmState st = init_dlm(y[0], X.row(0).transpose(), g);
  AfState af = init_af(X.cols(), cfg);
  run.theta_path.row(0) = st.theta.transpose();
  for (Eigen::Index t = 1; t < T; ++t) {
    AfStepResult r = af_step(st, af, X.row(t).transpose(), y[t]);
    run.lambda_path[t] = r.af.lambda;
    run.gradient[t] = r.gradient;
    run.forecast[t] = r.density.mean;
    run.error[t] = r.forecast_error;
    run.theta_path.row(t) = r.state.theta.transpose();
    st = std::move(r.state);
    af = std::move(r.af);
  }
  run.final_state = std::move(st);
  run.final_af = std::move(af);
  return run;
}

}  // namespace adma
