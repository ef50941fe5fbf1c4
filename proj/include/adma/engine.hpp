#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adma/adaptive.hpp"
#include "adma/combine.hpp"
#include "adma/dlm.hpp"
#include "adma/errors.hpp"
#include "adma/parallel.hpp"

namespace adma {

// All 2^D - 1 nonempty predictor subsets in binary-counting order: mask m
// includes predictor j iff bit j of m is set, so {0}, {1}, {0,1}, {2}, ...
inline std::vector<ModelSpec> enumerate_models(int n_predictors) {
  if (n_predictors < 1) throw validation_error("enumerate_models: need at least one predictor");
  if (n_predictors >= 31) throw validation_error("enumerate_models: predictor count too large");
  std::vector<ModelSpec> specs;
  specs.reserve((1u << n_predictors) - 1);
  for (std::uint32_t mask = 1; mask < (1u << n_predictors); ++mask) {
    ModelSpec s;
    for (int j = 0; j < n_predictors; ++j)
      if (mask & (1u << j)) s.predictors.push_back(j);
    specs.push_back(std::move(s));
  }
  return specs;
}

enum class StrategyKind { adma, edma, dma, bma, dlm, ar1 };

inline StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "adma") return StrategyKind::adma;
  if (s == "edma") return StrategyKind::edma;
  if (s == "dma") return StrategyKind::dma;
  if (s == "bma") return StrategyKind::bma;
  if (s == "dlm") return StrategyKind::dlm;
  if (s == "ar1") return StrategyKind::ar1;
  throw validation_error("unknown strategy kind: " + s);
}

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::adma: return "adma";
    case StrategyKind::edma: return "edma";
    case StrategyKind::dma: return "dma";
    case StrategyKind::bma: return "bma";
    case StrategyKind::dlm: return "dlm";
    case StrategyKind::ar1: return "ar1";
  }
  throw validation_error("unknown strategy kind");
}

struct StrategyConfig {
  std::string name;                   // defaults to the kind string
  StrategyKind kind = StrategyKind::adma;
  double g = 100.0;
  std::optional<double> lambda;       // dma/dlm default 0.99, bma default 1
  double alpha = 0.99;                // dma weight forgetting
  std::optional<double> c;            // dma comeback floor; default 0.001/K
  std::vector<double> lambda_grid;    // edma; default 0.90 .. 0.99 step 0.01
  AdamConfig adam;                    // adma tuner
  int ar1_min_window = 20;
};

// Guard against accidental 2^D explosions. Pools above d_max predictors are
// refused unless explicitly allowed.
struct PoolLimits {
  int d_max = 20;
  bool allow_large = false;
};

inline std::vector<double> default_edma_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(0.90 + 0.01 * i);
  return grid;
}

// One forecast round: everything known right before y was revealed, plus y.
// Weights are the ones the combined forecast used (pre-update). lambdas are
// filled only for strategies whose experts adapt them.
struct ForecastRecord {
  std::int64_t t = 0;  // 1-based time index of the target observation
  double y = kNaN;
  double forecast = kNaN;
  Eigen::VectorXd model_forecasts;
  Eigen::VectorXd model_weights;
  Eigen::VectorXd model_lambdas;
  Eigen::VectorXd inclusion;
};

namespace detail {

struct Expert {
  ModelSpec spec;
  double lambda = 0.99;          // fixed forgetting; adaptive kinds track af.lambda
  DlmState state;
  std::optional<AfState> af;
  bool frozen = false;
};

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const ModelSpec& spec) {
  Eigen::VectorXd z(spec.dim());
  z[0] = 1.0;
  for (std::size_t i = 0; i < spec.predictors.size(); ++i)
    z[static_cast<Eigen::Index>(i) + 1] = x[spec.predictors[i]];
  return z;
}

}  // namespace detail

// Online forecaster for one strategy. Covariates arrive unprojected; each
// expert sees [1, x restricted to its subset]. The first observation only
// initializes the experts; every later observation yields a ForecastRecord.
class Engine {
 public:
  Engine(StrategyConfig cfg, int n_predictors, PoolLimits limits = {}, int parallelism = 1)
      : cfg_(std::move(cfg)), n_predictors_(n_predictors), parallelism_(parallelism) {
    if (n_predictors < 1) throw validation_error("engine: need at least one predictor column");
    if (parallelism_ < 1) parallelism_ = 1;
    if (!(cfg_.g > 0.0)) throw validation_error("engine: prior scale g must be positive");
    if (cfg_.name.empty()) cfg_.name = to_string(cfg_.kind);

    switch (cfg_.kind) {
      case StrategyKind::adma: {
        validate_adam_config(cfg_.adam);
        build_subset_pool(n_predictors, limits, /*lambda=*/cfg_.adam.lambda_init);
        hedge_ = confhedge_init(static_cast<int>(experts_.size()));
        break;
      }
      case StrategyKind::dma: {
        cfg_.lambda = cfg_.lambda.value_or(0.99);
        build_subset_pool(n_predictors, limits, *cfg_.lambda);
        cfg_.c = cfg_.c.value_or(0.001 / static_cast<double>(experts_.size()));
        dma_ = dma_init(static_cast<int>(experts_.size()), cfg_.alpha, *cfg_.c);
        break;
      }
      case StrategyKind::bma: {
        cfg_.lambda = cfg_.lambda.value_or(1.0);
        cfg_.alpha = 1.0;
        cfg_.c = 0.0;
        build_subset_pool(n_predictors, limits, *cfg_.lambda);
        dma_ = dma_init(static_cast<int>(experts_.size()), 1.0, 0.0);
        break;
      }
      case StrategyKind::edma: {
        if (cfg_.lambda_grid.empty()) cfg_.lambda_grid = default_edma_grid();
        cfg_.alpha = 1.0;
        cfg_.c = 0.0;
        for (double lam : cfg_.lambda_grid) adma::detail::check_lambda(lam);
        check_pool_size(n_predictors, limits);
        auto specs = enumerate_models(n_predictors);
        for (const auto& s : specs)
          for (double lam : cfg_.lambda_grid) {
            detail::Expert e;
            e.spec = s;
            e.lambda = lam;
            experts_.push_back(std::move(e));
          }
        dma_ = dma_init(static_cast<int>(experts_.size()), 1.0, 0.0);
        break;
      }
      case StrategyKind::dlm: {
        cfg_.lambda = cfg_.lambda.value_or(0.99);
        adma::detail::check_lambda(*cfg_.lambda);
        detail::Expert e;
        for (int j = 0; j < n_predictors; ++j) e.spec.predictors.push_back(j);
        e.lambda = *cfg_.lambda;
        experts_.push_back(std::move(e));
        dma_ = dma_init(1, 1.0, 0.0);
        break;
      }
      case StrategyKind::ar1: {
        if (cfg_.ar1_min_window < 3)
          throw validation_error("engine: ar1 min_window must be >= 3");
        break;
      }
    }
  }

  bool initialized() const { return t_ > 0; }
  std::size_t n_experts() const { return experts_.size(); }

  std::vector<ModelSpec> specs() const {
    std::vector<ModelSpec> out;
    out.reserve(experts_.size());
    for (const auto& e : experts_) out.push_back(e.spec);
    return out;
  }

  const StrategyConfig& config() const { return cfg_; }

  // Rough per-pool footprint, dominated by each expert's covariance blocks.
  static std::size_t estimate_memory_bytes(const StrategyConfig& cfg, int n_predictors) {
    std::size_t d = static_cast<std::size_t>(n_predictors) + 1;
    std::size_t per_expert = (2 * d * d + 6 * d + 16) * sizeof(double);
    std::size_t pool = n_predictors >= 63 ? ~std::size_t{0}
                                          : (std::size_t{1} << n_predictors) - 1;
    if (cfg.kind == StrategyKind::edma) {
      std::size_t grid = cfg.lambda_grid.empty() ? 10 : cfg.lambda_grid.size();
      pool *= grid;
    }
    if (cfg.kind == StrategyKind::dlm || cfg.kind == StrategyKind::ar1) pool = 1;
    return pool * per_expert;
  }

  // Absorb the first observation; no forecast is produced for it.
  void observe_first(const Eigen::VectorXd& x, double y) {
    if (initialized()) throw validation_error("engine: already initialized");
    check_input(x, y);
    if (cfg_.kind == StrategyKind::ar1) {
      y_sum_ = y;
      y_last_ = y;
      n_obs_ = 1;
    } else {
      parallel_for(experts_.size(), parallelism_, [&](std::size_t k) {
        auto& e = experts_[k];
        e.state = init_dlm(y, detail::project(x, e.spec), cfg_.g);
        if (cfg_.kind == StrategyKind::adma)
          e.af = init_af(e.spec.dim(), cfg_.adam);
      });
    }
    t_ = 1;
  }

  // Forecast y from x, then absorb the realized value.
  ForecastRecord step(const Eigen::VectorXd& x, double y) {
    if (!initialized()) throw validation_error("engine: step before first observation");
    check_input(x, y);
    ++t_;
    if (cfg_.kind == StrategyKind::ar1) return ar1_step(y);

    const std::size_t K = experts_.size();
    std::vector<PredictiveDensity> pds(K);
    parallel_for(K, parallelism_, [&](std::size_t k) {
      const auto& e = experts_[k];
      double lam = e.af ? e.af->lambda : e.lambda;
      pds[k] = predict(e.state, detail::project(x, e.spec), lam);
    });

    ForecastRecord rec;
    rec.t = t_;
    rec.y = y;
    rec.model_forecasts.resize(K);
    for (std::size_t k = 0; k < K; ++k) rec.model_forecasts[k] = pds[k].mean;
    rec.model_weights = cfg_.kind == StrategyKind::adma ? hedge_.weights : dma_.weights;
    rec.forecast = combine_forecast(rec.model_weights, rec.model_forecasts);
    rec.inclusion = inclusion_probabilities(rec.model_weights, specs(), n_predictors_);
    if (cfg_.kind == StrategyKind::adma) {
      rec.model_lambdas.resize(K);
      for (std::size_t k = 0; k < K; ++k) rec.model_lambdas[k] = experts_[k].af->lambda;
    }

    // Absorb y. A degenerate update freezes that expert: its state, lambda
    // and derivatives stop moving but its (valid) predictive density keeps
    // entering the pool.
    Eigen::VectorXd logliks(K), losses(K);
    parallel_for(K, parallelism_, [&](std::size_t k) {
      auto& e = experts_[k];
      logliks[static_cast<Eigen::Index>(k)] = predictive_log_density(pds[k], y);
      losses[static_cast<Eigen::Index>(k)] = squared_error_loss(y, pds[k].mean);
      if (e.frozen) return;
      try {
        Eigen::VectorXd z = detail::project(x, e.spec);
        if (e.af) {
          AfStepResult r = af_step(e.state, *e.af, z, y);
          e.state = std::move(r.state);
          e.af = std::move(r.af);
        } else {
          e.state = update(e.state, z, y, e.lambda);
        }
      } catch (const numerical_error&) {
        e.frozen = true;
      }
    });

    if (cfg_.kind == StrategyKind::adma)
      hedge_ = confhedge_update(hedge_, losses);
    else
      dma_ = dma_update_weights(dma_, logliks);
    return rec;
  }

  const ConfHedgeState& hedge_state() const { return hedge_; }
  const DmaCombinerState& dma_state() const { return dma_; }

 private:
  void check_input(const Eigen::VectorXd& x, double y) const {
    if (x.size() != n_predictors_)
      throw validation_error("engine: expected " + std::to_string(n_predictors_) +
                             " predictors, got " + std::to_string(x.size()));
    if (!x.allFinite() || !std::isfinite(y))
      throw validation_error("engine: non-finite observation at t=" + std::to_string(t_ + 1));
  }

  void check_pool_size(int n_predictors, const PoolLimits& limits) const {
    if (n_predictors > limits.d_max && !limits.allow_large)
      throw validation_error(
          "engine: " + std::to_string(n_predictors) + " predictors imply a pool of ~" +
          std::to_string(estimate_memory_bytes(cfg_, n_predictors) / (1024 * 1024)) +
          " MiB; raise d_max or set allow_large to proceed");
  }

  void build_subset_pool(int n_predictors, const PoolLimits& limits, double lambda) {
    adma::detail::check_lambda(lambda);
    check_pool_size(n_predictors, limits);
    auto specs = enumerate_models(n_predictors);
    experts_.reserve(specs.size());
    for (auto& s : specs) {
      detail::Expert e;
      e.spec = std::move(s);
      e.lambda = lambda;
      experts_.push_back(std::move(e));
    }
  }

  // Expanding-window AR(1) with mean padding until the window is long enough.
  // Running sums accumulate pairs (y[s-1], y[s]) in arrival order.
  ForecastRecord ar1_step(double y) {
    ForecastRecord rec;
    rec.t = t_;
    rec.y = y;
    double fc;
    if (n_obs_ >= 2) {
      sx_ += y_prev_;
      sz_ += y_last_;
      sxx_ += y_prev_ * y_prev_;
      sxz_ += y_prev_ * y_last_;
      n_pairs_ += 1.0;
    }
    if (n_obs_ >= cfg_.ar1_min_window) {
      double det = n_pairs_ * sxx_ - sx_ * sx_;
      if (det > 1e-12 * std::max(1.0, n_pairs_ * sxx_)) {
        double slope = (n_pairs_ * sxz_ - sx_ * sz_) / det;
        double intercept = (sz_ - slope * sx_) / n_pairs_;
        fc = intercept + slope * y_last_;
      } else {
        fc = y_sum_ / static_cast<double>(n_obs_);
      }
    } else {
      fc = y_sum_ / static_cast<double>(n_obs_);
    }
    rec.forecast = fc;
    rec.model_forecasts = Eigen::VectorXd::Constant(1, fc);
    rec.model_weights = Eigen::VectorXd::Constant(1, 1.0);
    rec.inclusion = Eigen::VectorXd();
    y_prev_ = y_last_;
    y_last_ = y;
    y_sum_ += y;
    ++n_obs_;
    return rec;
  }

  StrategyConfig cfg_;
  int n_predictors_ = 0;
  int parallelism_ = 1;
  std::int64_t t_ = 0;
  std::vector<detail::Expert> experts_;
  ConfHedgeState hedge_;
  DmaCombinerState dma_;
  // ar1 running state
  double y_sum_ = 0.0, y_last_ = 0.0, y_prev_ = 0.0;
  double sx_ = 0.0, sz_ = 0.0, sxx_ = 0.0, sxz_ = 0.0, n_pairs_ = 0.0;
  std::int64_t n_obs_ = 0;
};

struct RunResult {
  std::vector<ForecastRecord> records;
  std::vector<ModelSpec> specs;
  std::size_t n_experts = 0;
  StrategyConfig config;  // with defaults resolved
};

// Run one strategy over a full series. X is T x D raw predictors.
inline RunResult run_series(const StrategyConfig& cfg, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y, PoolLimits limits = {},
                            int parallelism = 1) {
  if (X.rows() != y.size()) throw validation_error("run_series: X rows must match y length");
  if (X.rows() < 2) throw validation_error("run_series: need at least two observations");
  Engine eng(cfg, static_cast<int>(X.cols()), limits, parallelism);
  RunResult out;
  out.specs = eng.specs();
  out.n_experts = eng.n_experts();
  out.config = eng.config();
  out.records.reserve(static_cast<std::size_t>(X.rows()) - 1);
  eng.observe_first(X.row(0).transpose(), y[0]);
  for (Eigen::Index t = 1; t < X.rows(); ++t)
    out.records.push_back(eng.step(X.row(t).transpose(), y[t]));
  return out;
}

// Fixed-density expert pool: each expert is a known Gaussian, weights evolve
// by the exponential-forgetting recursion. Row t of weights holds the
// posterior after absorbing y[t].
struct GaussianExpert {
  double mean = 0.0;
  double variance = 1.0;
};

inline Eigen::MatrixXd run_gaussian_dma(const std::vector<GaussianExpert>& experts,
                                        const Eigen::VectorXd& y, double alpha, double c) {
  if (experts.empty()) throw validation_error("run_gaussian_dma: no experts");
  const auto K = static_cast<int>(experts.size());
  DmaCombinerState st = dma_init(K, alpha, c);
  Eigen::MatrixXd weights(y.size(), K);
  Eigen::VectorXd logliks(K);
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    for (int k = 0; k < K; ++k)
      logliks[k] = gaussian_log_density(y[t], experts[k].mean, experts[k].variance);
    st = dma_update_weights(st, logliks);
    weights.row(t) = st.weights.transpose();
  }
  return weights;
}

}  // namespace adma
