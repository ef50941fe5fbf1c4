#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adma/dlm.hpp"
#include "adma/errors.hpp"
#include "adma/math.hpp"

namespace adma {

inline constexpr double kSimplexTol = 1e-8;

namespace detail {

inline void check_simplex(const Eigen::VectorXd& w, const char* what) {
  if (w.size() == 0) throw validation_error(std::string(what) + ": empty weight vector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0)) throw validation_error(std::string(what) + ": negative weight");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw validation_error(std::string(what) + ": weights sum to " + std::to_string(sum));
}

}  // namespace detail

// Exponential-forgetting model averaging weights. alpha < 1 flattens the
// posterior each step; c > 0 is a floor added to the flattened prior so dead
// models can come back. alpha = 1, c = 0 is exact Bayesian model averaging.
struct DmaCombinerState {
  Eigen::VectorXd weights;
  double alpha = 0.99;
  double c = 0.0;
};

inline DmaCombinerState dma_init(int K, double alpha, double c) {
  if (K < 1) throw validation_error("dma_init: need at least one model");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw validation_error("dma_init: alpha outside [0, 1]");
  if (!(c >= 0.0)) throw validation_error("dma_init: c must be >= 0");
  DmaCombinerState st;
  st.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  st.alpha = alpha;
  st.c = c;
  return st;
}

// w'_k proportional to exp(loglik_k) * (w_k^alpha + c). The mixture mass is
// accumulated in log space so likelihood ratios of hundreds of nats normalize
// correctly; weights themselves stay linear, so a model whose posterior mass
// underflows to exactly 0 stays at 0 until c rescues it.
inline DmaCombinerState dma_update_weights(const DmaCombinerState& st,
                                           const Eigen::VectorXd& log_likelihoods) {
  if (log_likelihoods.size() != st.weights.size())
    throw validation_error("dma_update_weights: likelihood count does not match model count");
  for (Eigen::Index k = 0; k < log_likelihoods.size(); ++k)
    if (!std::isfinite(log_likelihoods[k]))
      throw validation_error("dma_update_weights: non-finite log-likelihood for model " +
                             std::to_string(k));
  detail::check_simplex(st.weights, "dma_update_weights");

  const auto K = st.weights.size();
  const double log_c = st.c > 0.0 ? std::log(st.c) : kNegInf;
  Eigen::VectorXd s(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double logw = st.weights[k] > 0.0 ? std::log(st.weights[k]) : kNegInf;
    // alpha = 0 would hit 0 * -inf for dead models; the flattened prior is 1.
    double flattened = st.alpha == 0.0 ? 0.0 : st.alpha * logw;
    s[k] = log_likelihoods[k] + log_add_exp(flattened, log_c);
  }
  double lse = log_sum_exp(s);
  if (lse == kNegInf)
    throw numerical_error("dma_update_weights: total mixture mass is zero (all models dead)");
  DmaCombinerState out = st;
  for (Eigen::Index k = 0; k < K; ++k) out.weights[k] = std::exp(s[k] - lse);
  out.weights /= out.weights.sum();
  return out;
}

// Pure Bayesian model averaging: the same recursion pinned at alpha = 1, c = 0.
inline DmaCombinerState bma_update_weights(const DmaCombinerState& st,
                                           const Eigen::VectorXd& log_likelihoods) {
  DmaCombinerState pinned = st;
  pinned.alpha = 1.0;
  pinned.c = 0.0;
  DmaCombinerState out = dma_update_weights(pinned, log_likelihoods);
  out.alpha = st.alpha;
  out.c = st.c;
  return out;
}

inline double combine_forecast(const Eigen::VectorXd& weights, const Eigen::VectorXd& forecasts) {
  if (weights.size() != forecasts.size())
    throw validation_error("combine_forecast: size mismatch");
  detail::check_simplex(weights, "combine_forecast");
  for (Eigen::Index i = 0; i < forecasts.size(); ++i)
    if (!std::isfinite(forecasts[i])) throw validation_error("combine_forecast: non-finite forecast");
  return weights.dot(forecasts);
}

inline double squared_error_loss(double y, double forecast) {
  double e = y - forecast;
  return 0.5 * e * e;
}

// Parameter-free aggregating state. eta is the learning rate schedule driven
// by the accumulated Jensen gap delta; eta = +inf denotes the follow-the-
// leader regime in force until the first strictly positive gap.
struct ConfHedgeState {
  Eigen::VectorXd weights;
  double delta = 0.0;
  double eta = kInf;
  std::int64_t t = 0;  // updates absorbed
};

inline ConfHedgeState confhedge_init(int K) {
  if (K < 1) throw validation_error("confhedge_init: need at least one expert");
  ConfHedgeState st;
  st.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  return st;
}

inline double confhedge_predict(const ConfHedgeState& st, const Eigen::VectorXd& forecasts) {
  return combine_forecast(st.weights, forecasts);
}

// One aggregation step on nonnegative losses:
//   exponential reweighting  w_mu ~ w_k exp(-eta l_k)   (argmin share at eta = inf)
//   uniform mixing           w'   = 1/((s+1)K) + s/(s+1) w_mu   on update s
//   gap accounting           delta += h - m, eta = max(1, ln K)/delta
// where h is the expected loss under w and m the mix loss. h >= m by
// convexity; tiny negative gaps from round-off are clamped, real ones are a
// contract violation.
inline ConfHedgeState confhedge_update(const ConfHedgeState& st, const Eigen::VectorXd& losses) {
  const auto K = st.weights.size();
  if (losses.size() != K) throw validation_error("confhedge_update: loss count mismatch");
  for (Eigen::Index k = 0; k < K; ++k)
    if (!(losses[k] >= 0.0) || !std::isfinite(losses[k]))
      throw validation_error("confhedge_update: losses must be finite and >= 0");
  detail::check_simplex(st.weights, "confhedge_update");

  double h = st.weights.dot(losses);
  double m = 0.0;
  Eigen::VectorXd w_mu(K);
  if (st.eta == kInf) {
    double min_loss = losses.minCoeff();
    m = min_loss;
    std::int64_t ties = 0;
    for (Eigen::Index k = 0; k < K; ++k)
      if (losses[k] == min_loss) ++ties;
    for (Eigen::Index k = 0; k < K; ++k)
      w_mu[k] = losses[k] == min_loss ? 1.0 / static_cast<double>(ties) : 0.0;
  } else {
    Eigen::VectorXd g(K);
    for (Eigen::Index k = 0; k < K; ++k)
      g[k] = (st.weights[k] > 0.0 ? std::log(st.weights[k]) : kNegInf) - st.eta * losses[k];
    double lse = log_sum_exp(g);
    for (Eigen::Index k = 0; k < K; ++k) w_mu[k] = std::exp(g[k] - lse);
    w_mu /= w_mu.sum();
    // mix loss -eta^-1 log E_w exp(-eta l); lse already holds log of the
    // unnormalized mass, and log sum w = 0 on the simplex.
    m = -lse / st.eta;
  }

  double s = static_cast<double>(st.t + 1);
  ConfHedgeState out = st;
  out.weights = Eigen::VectorXd::Constant(K, 1.0 / ((s + 1.0) * K)) + (s / (s + 1.0)) * w_mu;
  double gap = h - m;
  if (gap < -1e-9)
    throw numerical_error("confhedge_update: mix loss exceeds expected loss (gap " +
                          std::to_string(gap) + ")");
  if (gap < 0.0) gap = 0.0;
  out.delta = st.delta + gap;
  double norm = std::max(1.0, std::log(static_cast<double>(K)));
  out.eta = out.delta > 0.0 ? norm / out.delta : kInf;
  out.t = st.t + 1;
  return out;
}

// P(predictor j in model) = sum of weights of experts whose spec includes j.
// specs run parallel to weights; several experts may share a spec (e.g. a
// forgetting grid), their weights simply accumulate.
inline Eigen::VectorXd inclusion_probabilities(const Eigen::VectorXd& weights,
                                               const std::vector<ModelSpec>& specs,
                                               int n_predictors) {
  if (static_cast<std::size_t>(weights.size()) != specs.size())
    throw validation_error("inclusion_probabilities: weight/spec count mismatch");
  if (n_predictors < 0) throw validation_error("inclusion_probabilities: negative predictor count");
  detail::check_simplex(weights, "inclusion_probabilities");
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(n_predictors);
  for (std::size_t k = 0; k < specs.size(); ++k)
    for (int p : specs[k].predictors) {
      if (p < 0 || p >= n_predictors)
        throw validation_error("inclusion_probabilities: predictor index out of range");
      probs[p] += weights[static_cast<Eigen::Index>(k)];
    }
  for (Eigen::Index j = 0; j < probs.size(); ++j) probs[j] = std::clamp(probs[j], 0.0, 1.0);
  return probs;
}

}  // namespace adma
