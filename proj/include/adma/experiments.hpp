#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adma/adaptive.hpp"
#include "adma/dataset.hpp"
#include "adma/engine.hpp"
#include "adma/eval.hpp"
#include "adma/io.hpp"
#include "adma/parallel.hpp"
#include "adma/rng.hpp"
#include "adma/simgen.hpp"

namespace adma {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw validation_error(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error("config key '" + key + "' has the wrong type");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config serialization

inline json to_json(const AdamConfig& a) {
  return json{{"gamma", a.gamma},           {"beta1", a.beta1},
              {"beta2", a.beta2},           {"epsilon", a.epsilon},
              {"lambda_init", a.lambda_init}, {"lambda_min", a.lambda_min},
              {"lambda_max", a.lambda_max}};
}

inline AdamConfig adam_from_json(const json& obj, AdamConfig base = {}) {
  detail::check_keys(obj, {"gamma", "beta1", "beta2", "epsilon", "lambda_init", "lambda_min",
                           "lambda_max"},
                     "adam");
  base.gamma = detail::get_or(obj, "gamma", base.gamma);
  base.beta1 = detail::get_or(obj, "beta1", base.beta1);
  base.beta2 = detail::get_or(obj, "beta2", base.beta2);
  base.epsilon = detail::get_or(obj, "epsilon", base.epsilon);
  base.lambda_init = detail::get_or(obj, "lambda_init", base.lambda_init);
  base.lambda_min = detail::get_or(obj, "lambda_min", base.lambda_min);
  base.lambda_max = detail::get_or(obj, "lambda_max", base.lambda_max);
  return base;
}

inline json to_json(const StrategyConfig& s) {
  json j{{"name", s.name}, {"kind", to_string(s.kind)}, {"g", s.g}};
  switch (s.kind) {
    case StrategyKind::adma:
      j["adam"] = to_json(s.adam);
      break;
    case StrategyKind::edma:
      j["lambda_grid"] = s.lambda_grid;
      break;
    case StrategyKind::dma:
      if (s.lambda) j["lambda"] = *s.lambda;
      j["alpha"] = s.alpha;
      if (s.c) j["c"] = *s.c;
      break;
    case StrategyKind::bma:
    case StrategyKind::dlm:
      if (s.lambda) j["lambda"] = *s.lambda;
      break;
    case StrategyKind::ar1:
      j["min_window"] = s.ar1_min_window;
      j.erase("g");
      break;
  }
  return j;
}

inline StrategyConfig strategy_from_json(const json& obj) {
  detail::check_keys(obj,
                     {"name", "kind", "g", "lambda", "alpha", "c", "lambda_grid", "adam",
                      "min_window"},
                     "strategy");
  if (!obj.contains("kind")) throw validation_error("strategy: missing 'kind'");
  StrategyConfig s;
  s.kind = strategy_kind_from_string(obj.at("kind").get<std::string>());
  s.name = detail::get_or<std::string>(obj, "name", "");
  s.g = detail::get_or(obj, "g", s.g);
  if (obj.contains("lambda")) s.lambda = obj.at("lambda").get<double>();
  s.alpha = detail::get_or(obj, "alpha", s.alpha);
  if (obj.contains("c")) s.c = obj.at("c").get<double>();
  s.lambda_grid = detail::get_or(obj, "lambda_grid", s.lambda_grid);
  if (obj.contains("adam")) s.adam = adam_from_json(obj.at("adam"));
  s.ar1_min_window = detail::get_or(obj, "min_window", s.ar1_min_window);
  return s;
}

// The reference strategy set: the adaptive combiner, the forgetting-grid
// pool, two fixed-forgetting averages, exact averaging, the full fixed
// model, and the AR(1) benchmark.
inline std::vector<StrategyConfig> default_strategies() {
  std::vector<StrategyConfig> v;
  StrategyConfig s;
  s.name = "ADMA";
  s.kind = StrategyKind::adma;
  v.push_back(s);
  s = {};
  s.name = "eDMA";
  s.kind = StrategyKind::edma;
  v.push_back(s);
  s = {};
  s.name = "DMA_0.99";
  s.kind = StrategyKind::dma;
  s.lambda = 0.99;
  s.alpha = 0.99;
  v.push_back(s);
  s = {};
  s.name = "DMA_0.95";
  s.kind = StrategyKind::dma;
  s.lambda = 0.95;
  s.alpha = 0.95;
  v.push_back(s);
  s = {};
  s.name = "BMA";
  s.kind = StrategyKind::bma;
  v.push_back(s);
  s = {};
  s.name = "DLM_0.99";
  s.kind = StrategyKind::dlm;
  s.lambda = 0.99;
  v.push_back(s);
  s = {};
  s.name = "AR1";
  s.kind = StrategyKind::ar1;
  v.push_back(s);
  return v;
}

// ---------------------------------------------------------------------------
// Data sources

struct DataSourceConfig {
  // file source
  std::string csv_path;
  std::string response = "y";
  bool lag_predictors = false;
  // generator source (used when csv_path is empty)
  std::string design;  // static | abrupt | drift
  int T = 1000;
  int d = 5;
  std::uint64_t seed = 1;
  double noise_sd = 1.0;
  double lambda_true = 0.95;  // drift
  double g = 100.0;           // drift lockstep prior
  std::vector<double> theta0;
  std::vector<CoefBreak> breaks;
};

inline std::vector<double> default_theta0(const std::string& design) {
  if (design == "abrupt") return {3.0, 2.0, 1.0, -1.0, -2.0};
  return {-2.0, -1.0, 1.0, 2.0, 3.0};
}

inline std::vector<CoefBreak> default_breaks() {
  return {{100, 0.5}, {400, 1.4}, {700, 0.7}};
}

inline SimSeries generate_series(const DataSourceConfig& c) {
  if (c.design == "static" || c.design == "abrupt") {
    auto th = c.theta0.empty() ? default_theta0(c.design) : c.theta0;
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(th.data(), th.size());
    auto breaks = c.design == "static"
                      ? std::vector<CoefBreak>{}
                      : (c.breaks.empty() ? default_breaks() : c.breaks);
    return gen_abrupt(c.T, theta, breaks, c.noise_sd, c.seed);
  }
  if (c.design == "drift") return gen_drift(c.T, c.d, c.lambda_true, c.g, c.noise_sd, c.seed);
  throw validation_error("unknown generator design: " + c.design);
}

inline Dataset dataset_from_sim(const SimSeries& s) {
  Dataset ds;
  ds.response_name = "y";
  ds.y = s.y;
  ds.X = s.X;
  ds.time.reserve(s.y.size());
  for (Eigen::Index t = 0; t < s.y.size(); ++t) ds.time.push_back(std::to_string(t + 1));
  for (Eigen::Index j = 0; j < s.X.cols(); ++j)
    ds.predictor_names.push_back("x" + std::to_string(j + 1));
  return ds;
}

inline DataSourceConfig data_source_from_json(const json& obj) {
  detail::check_keys(obj,
                     {"csv", "response", "lag_predictors", "design", "T", "d", "seed", "noise_sd",
                      "lambda_true", "g", "theta0", "breaks"},
                     "data");
  DataSourceConfig c;
  c.csv_path = detail::get_or<std::string>(obj, "csv", "");
  c.response = detail::get_or<std::string>(obj, "response", c.response);
  c.lag_predictors = detail::get_or(obj, "lag_predictors", false);
  c.design = detail::get_or<std::string>(obj, "design", "");
  c.T = detail::get_or(obj, "T", c.T);
  c.d = detail::get_or(obj, "d", c.d);
  c.seed = detail::get_or<std::uint64_t>(obj, "seed", c.seed);
  c.noise_sd = detail::get_or(obj, "noise_sd", c.noise_sd);
  c.lambda_true = detail::get_or(obj, "lambda_true", c.lambda_true);
  c.g = detail::get_or(obj, "g", c.g);
  c.theta0 = detail::get_or(obj, "theta0", c.theta0);
  if (obj.contains("breaks")) {
    for (const auto& b : obj.at("breaks")) {
      if (!b.is_array() || b.size() != 2)
        throw validation_error("data.breaks entries must be [time, multiplier] pairs");
      c.breaks.push_back({b.at(0).get<int>(), b.at(1).get<double>()});
    }
  }
  if (c.csv_path.empty() == c.design.empty())
    throw validation_error("data: exactly one of 'csv' or 'design' must be given");
  return c;
}

inline json to_json(const DataSourceConfig& c) {
  json j;
  if (!c.csv_path.empty()) {
    j["csv"] = c.csv_path;
    j["response"] = c.response;
    j["lag_predictors"] = c.lag_predictors;
  } else {
    j["design"] = c.design;
    j["T"] = c.T;
    j["seed"] = c.seed;
    j["noise_sd"] = c.noise_sd;
    if (c.design == "drift") {
      j["d"] = c.d;
      j["lambda_true"] = c.lambda_true;
      j["g"] = c.g;
    } else {
      j["theta0"] = c.theta0.empty() ? default_theta0(c.design) : c.theta0;
      if (c.design == "abrupt") {
        json bs = json::array();
        for (const auto& b : c.breaks.empty() ? default_breaks() : c.breaks)
          bs.push_back(json::array({b.time, b.multiplier}));
        j["breaks"] = bs;
      }
    }
  }
  return j;
}

inline Dataset resolve_dataset(const DataSourceConfig& c) {
  if (!c.csv_path.empty()) {
    CsvOptions opts;
    opts.response = c.response;
    opts.lag_predictors = c.lag_predictors;
    return load_csv(c.csv_path, opts);
  }
  return dataset_from_sim(generate_series(c));
}

// ---------------------------------------------------------------------------
// Backtest

struct BacktestOptions {
  DataSourceConfig data;
  std::vector<StrategyConfig> strategies;  // empty = default set
  std::string benchmark;                    // empty = no ratios / tests
  int burn_in = 20;
  int hac_lags = 0;
  PoolLimits limits;
  int parallelism = 1;
  std::string outdir = "out";
};

inline BacktestOptions backtest_options_from_json(const json& obj) {
  detail::check_keys(obj,
                     {"data", "strategies", "benchmark", "burn_in", "hac_lags", "d_max",
                      "allow_large", "parallelism", "output_dir"},
                     "backtest config");
  BacktestOptions o;
  if (!obj.contains("data")) throw validation_error("backtest config: missing 'data'");
  o.data = data_source_from_json(obj.at("data"));
  if (obj.contains("strategies"))
    for (const auto& s : obj.at("strategies")) o.strategies.push_back(strategy_from_json(s));
  bool defaulted = o.strategies.empty();
  o.benchmark = detail::get_or<std::string>(obj, "benchmark", defaulted ? "AR1" : "");
  o.burn_in = detail::get_or(obj, "burn_in", o.burn_in);
  o.hac_lags = detail::get_or(obj, "hac_lags", o.hac_lags);
  o.limits.d_max = detail::get_or(obj, "d_max", o.limits.d_max);
  o.limits.allow_large = detail::get_or(obj, "allow_large", o.limits.allow_large);
  o.parallelism = detail::get_or(obj, "parallelism", o.parallelism);
  o.outdir = detail::get_or<std::string>(obj, "output_dir", o.outdir);
  return o;
}

struct BacktestResult {
  std::vector<std::pair<std::string, RunResult>> runs;  // config order, failures omitted
  EvalReport report;
  Dataset data;
  json config_echo;  // resolved experiment identity (no execution details)
};

struct RecordRow {
  std::int64_t t = 0;
  double y = kNaN;
  double forecast = kNaN;
};

// Shared scoring path for live runs and replays from records.csv. Strategies
// whose traces misalign with the benchmark are reported as errors, not
// silently dropped.
inline EvalReport evaluate_records(const std::map<std::string, std::vector<RecordRow>>& traces,
                                   const std::string& benchmark, int burn_in, int hac_lags) {
  if (burn_in < 0) throw validation_error("evaluate_records: negative burn_in");
  EvalReport rep;
  rep.benchmark = benchmark;
  rep.burn_in = burn_in;

  std::map<std::string, std::pair<Eigen::VectorXd, Eigen::VectorXd>> aligned;  // y, forecast
  std::map<std::string, std::vector<std::int64_t>> times;
  for (const auto& [name, rows] : traces) {
    if (static_cast<std::size_t>(burn_in) >= rows.size()) {
      rep.errors[name] = "burn_in leaves no forecasts";
      continue;
    }
    auto n = rows.size() - static_cast<std::size_t>(burn_in);
    Eigen::VectorXd y(n), f(n);
    std::vector<std::int64_t> ts(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = rows[i + static_cast<std::size_t>(burn_in)];
      y[static_cast<Eigen::Index>(i)] = r.y;
      f[static_cast<Eigen::Index>(i)] = r.forecast;
      ts[i] = r.t;
    }
    aligned[name] = {std::move(y), std::move(f)};
    times[name] = std::move(ts);
    rep.msfe[name] = msfe(aligned[name].first, aligned[name].second);
  }
  if (!aligned.empty()) rep.n_forecasts = static_cast<std::int64_t>(times.begin()->second.size());

  if (benchmark.empty()) return rep;
  auto bench = aligned.find(benchmark);
  if (bench == aligned.end()) {
    if (!rep.errors.count(benchmark))
      throw validation_error("benchmark strategy '" + benchmark + "' not in the record set");
    return rep;  // benchmark itself failed; MSFEs stand alone
  }
  if (aligned.size() < 2) return rep;  // nothing to compare against

  const auto& bench_times = times.at(benchmark);
  for (const auto& [name, yf] : aligned) {
    if (times.at(name) != bench_times) {
      rep.errors[name] = "forecast timestamps do not align with benchmark";
      continue;
    }
    rep.msfe_ratio[name] = msfe_ratio(rep.msfe.at(name), rep.msfe.at(benchmark));
    if (name == benchmark) continue;
    try {
      rep.cw[name] = clark_west(yf.first, bench->second.second, yf.second, hac_lags);
    } catch (const numerical_error&) {
      rep.errors["cw:" + name] = "no difference";
    }
  }
  return rep;
}

inline std::map<std::string, std::vector<RecordRow>> traces_from_runs(
    const std::vector<std::pair<std::string, RunResult>>& runs) {
  std::map<std::string, std::vector<RecordRow>> traces;
  for (const auto& [name, run] : runs) {
    auto& rows = traces[name];
    rows.reserve(run.records.size());
    for (const auto& r : run.records) rows.push_back({r.t, r.y, r.forecast});
  }
  return traces;
}

inline BacktestResult run_backtest(const BacktestOptions& opts) {
  BacktestResult res;
  res.data = resolve_dataset(opts.data);
  if (res.data.y.size() < 2) throw validation_error("backtest: need at least two observations");
  if (res.data.predictor_names.empty())
    throw validation_error("backtest: dataset has no predictor columns");

  auto strategies = opts.strategies.empty() ? default_strategies() : opts.strategies;
  std::set<std::string> names;
  for (auto& s : strategies) {
    if (s.name.empty()) s.name = to_string(s.kind);
    if (!names.insert(s.name).second)
      throw validation_error("backtest: duplicate strategy name '" + s.name + "'");
  }
  if (!opts.benchmark.empty() && !names.count(opts.benchmark))
    throw validation_error("backtest: benchmark '" + opts.benchmark + "' is not a strategy");

  EvalReport partial;
  for (const auto& s : strategies) {
    try {
      RunResult run = run_series(s, res.data.X, res.data.y, opts.limits, opts.parallelism);
      res.runs.emplace_back(s.name, std::move(run));
    } catch (const std::exception& e) {
      partial.errors[s.name] = e.what();
    }
  }

  res.report = evaluate_records(traces_from_runs(res.runs), opts.benchmark, opts.burn_in,
                                opts.hac_lags);
  for (const auto& [k, v] : partial.errors) res.report.errors[k] = v;

  // Echo resolved configs for completed runs, raw ones for failures, in the
  // original order.
  json strat_json = json::array();
  for (const auto& s : strategies) {
    const RunResult* done = nullptr;
    for (const auto& [name, run] : res.runs)
      if (name == s.name) {
        done = &run;
        break;
      }
    strat_json.push_back(done ? to_json(done->config) : to_json(s));
  }
  res.config_echo = json{{"command", "backtest"},
                         {"data", to_json(opts.data)},
                         {"strategies", strat_json},
                         {"benchmark", opts.benchmark},
                         {"burn_in", opts.burn_in},
                         {"hac_lags", opts.hac_lags}};
  return res;
}

inline json to_json(const EvalReport& rep) {
  json j;
  j["benchmark"] = rep.benchmark;
  j["burn_in"] = rep.burn_in;
  j["n_forecasts"] = rep.n_forecasts;
  j["msfe"] = rep.msfe;
  j["msfe_ratio"] = rep.msfe_ratio;
  json cw = json::object();
  for (const auto& [name, r] : rep.cw)
    cw[name] = json{{"stat", r.stat},
                    {"p_value", r.p_value},
                    {"n", r.n},
                    {"significant_5pct", r.p_value < 0.05}};
  j["clark_west"] = cw;
  j["errors"] = rep.errors;
  return j;
}

inline void write_backtest_outputs(const BacktestResult& res, const std::string& outdir) {
  namespace fs = std::filesystem;
  fs::create_directories(outdir);
  const std::string comment = res.config_echo.dump();

  CsvWriter records(fs::path(outdir) / "records.csv", comment, {"strategy", "t", "y", "forecast"});
  for (const auto& [name, run] : res.runs)
    for (const auto& r : run.records)
      records.row({name, fmt_int(r.t), fmt_double(r.y), fmt_double(r.forecast)});
  records.close();

  CsvWriter models(fs::path(outdir) / "models.csv", comment,
                   {"strategy", "model", "predictors", "lambda"});
  for (const auto& [name, run] : res.runs) {
    if (run.config.kind == StrategyKind::ar1) {
      models.row({name, "0", "", ""});
      continue;
    }
    const auto& grid = run.config.lambda_grid;
    for (std::size_t k = 0; k < run.specs.size(); ++k) {
      std::string preds;
      for (std::size_t i = 0; i < run.specs[k].predictors.size(); ++i) {
        if (i) preds += ';';
        preds += res.data.predictor_names[run.specs[k].predictors[i]];
      }
      std::string lam;
      switch (run.config.kind) {
        case StrategyKind::edma: lam = fmt_double(grid[k % grid.size()]); break;
        case StrategyKind::adma: lam = fmt_double(run.config.adam.lambda_init); break;
        default: lam = fmt_double(run.config.lambda.value_or(0.99)); break;
      }
      models.row({name, fmt_int(static_cast<std::int64_t>(k)), preds, lam});
    }
  }
  models.close();

  CsvWriter weights(fs::path(outdir) / "weights.csv", comment,
                    {"strategy", "t", "model", "weight", "forecast"});
  for (const auto& [name, run] : res.runs)
    for (const auto& r : run.records)
      for (Eigen::Index k = 0; k < r.model_weights.size(); ++k)
        weights.row({name, fmt_int(r.t), fmt_int(k), fmt_double(r.model_weights[k]),
                     fmt_double(r.model_forecasts[k])});
  weights.close();

  CsvWriter lambdas(fs::path(outdir) / "lambda_paths.csv", comment,
                    {"strategy", "t", "model", "lambda"});
  for (const auto& [name, run] : res.runs)
    for (const auto& r : run.records)
      for (Eigen::Index k = 0; k < r.model_lambdas.size(); ++k)
        lambdas.row({name, fmt_int(r.t), fmt_int(k), fmt_double(r.model_lambdas[k])});
  lambdas.close();

  CsvWriter incl(fs::path(outdir) / "inclusion_probs.csv", comment,
                 {"strategy", "t", "predictor", "probability"});
  for (const auto& [name, run] : res.runs)
    for (const auto& r : run.records)
      for (Eigen::Index j = 0; j < r.inclusion.size(); ++j)
        incl.row({name, fmt_int(r.t), res.data.predictor_names[j], fmt_double(r.inclusion[j])});
  incl.close();

  json report = to_json(res.report);
  report["config"] = res.config_echo;
  write_text_file(fs::path(outdir) / "report.json", report.dump(2) + "\n");
}

inline BacktestResult cmd_backtest(const BacktestOptions& opts) {
  BacktestResult res = run_backtest(opts);
  write_backtest_outputs(res, opts.outdir);
  return res;
}

// ---------------------------------------------------------------------------
// Replay scoring from a records.csv produced by cmd_backtest

struct ReportOptions {
  std::string records_path;
  std::string benchmark;  // empty = take from the embedded config
  int burn_in = -1;       // <0 = take from the embedded config (default 20)
  int hac_lags = -1;
  std::string out_path = "report.json";
};

inline json cmd_report(const ReportOptions& opts) {
  std::ifstream in(opts.records_path);
  if (!in) throw validation_error("cannot open records file: " + opts.records_path);

  std::string benchmark = opts.benchmark;
  int burn_in = opts.burn_in;
  int hac_lags = opts.hac_lags;
  json embedded;

  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      try {
        embedded = json::parse(body);
      } catch (const json::exception&) {
        // free-form comment; ignore
      }
      continue;
    }
    header = detail::split_csv_line(line);
    break;
  }
  if (embedded.is_object()) {
    if (benchmark.empty()) benchmark = detail::get_or<std::string>(embedded, "benchmark", "");
    if (burn_in < 0) burn_in = detail::get_or(embedded, "burn_in", 20);
    if (hac_lags < 0) hac_lags = detail::get_or(embedded, "hac_lags", 0);
  }
  if (burn_in < 0) burn_in = 20;
  if (hac_lags < 0) hac_lags = 0;

  auto col = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    throw validation_error("records file: missing column '" + name + "'");
  };
  int c_strategy = col("strategy"), c_t = col("t"), c_y = col("y"), c_f = col("forecast");

  std::map<std::string, std::vector<RecordRow>> traces;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw validation_error("records file line " + std::to_string(lineno) + ": ragged row");
    RecordRow r;
    r.t = static_cast<std::int64_t>(detail::parse_cell(cells[c_t], lineno, "t"));
    r.y = detail::parse_cell(cells[c_y], lineno, "y");
    r.forecast = detail::parse_cell(cells[c_f], lineno, "forecast");
    traces[cells[c_strategy]].push_back(r);
  }
  if (traces.empty()) throw validation_error("records file has no data rows");

  EvalReport rep = evaluate_records(traces, benchmark, burn_in, hac_lags);
  json out = to_json(rep);
  out["config"] = json{{"command", "report"},
                       {"records", opts.records_path},
                       {"benchmark", benchmark},
                       {"burn_in", burn_in},
                       {"hac_lags", hac_lags}};
  if (!opts.out_path.empty()) write_text_file(opts.out_path, out.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Simulation studies

struct SimulateOptions {
  std::string design = "drift";  // static | abrupt | drift | three-model
  int reps = 100;
  int T = 1000;
  int d = 5;
  std::uint64_t seed = 20260825;
  double noise_sd = 1.0;
  double lambda_true = 0.95;
  double g = 100.0;
  AdamConfig adam;
  std::vector<double> theta0;
  std::vector<CoefBreak> breaks;
  // three-model settings
  std::vector<Regime> regimes;  // default: the three-regime reference layout
  std::vector<double> alphas = {0.99, 0.95, 0.9};
  std::vector<double> cs = {0.0, 1e-20, 1e-3 / 3.0};
  std::string outdir = "out";
  int parallelism = 1;
};

inline std::vector<Regime> default_regimes() {
  return {{1.0, 4.0, 100}, {0.0, 0.64, 100}, {-2.5, 0.09, 100}};
}

struct WeightGridEntry {
  double alpha = 1.0;
  double c = 0.0;
  Eigen::MatrixXd weights;  // T x K, row t = weights after absorbing y[t]
};

struct SimulateResult {
  Eigen::MatrixXd lambda_paths;  // reps x T
  PathSummary summary;
  double lambda_min = kNaN;
  double lambda_max = kNaN;
  std::vector<WeightGridEntry> weight_grid;  // three-model only
  Eigen::VectorXd y;                          // three-model series
  std::vector<int> regime_labels;
  json summary_json;
};

inline json simulate_config_json(const SimulateOptions& o) {
  json j{{"command", "simulate"}, {"design", o.design}, {"seed", o.seed}};
  if (o.design == "three-model") {
    json regs = json::array();
    for (const auto& r : o.regimes.empty() ? default_regimes() : o.regimes)
      regs.push_back(json{{"mean", r.mean}, {"variance", r.variance}, {"length", r.length}});
    j["regimes"] = regs;
    j["alphas"] = o.alphas;
    j["cs"] = o.cs;
  } else {
    j["reps"] = o.reps;
    j["T"] = o.T;
    j["noise_sd"] = o.noise_sd;
    j["g"] = o.g;
    j["adam"] = to_json(o.adam);
    if (o.design == "drift") {
      j["d"] = o.d;
      j["lambda_true"] = o.lambda_true;
    } else {
      j["theta0"] = o.theta0.empty() ? default_theta0(o.design) : o.theta0;
      if (o.design == "abrupt") {
        json bs = json::array();
        for (const auto& b : o.breaks.empty() ? default_breaks() : o.breaks)
          bs.push_back(json::array({b.time, b.multiplier}));
        j["breaks"] = bs;
      }
    }
  }
  return j;
}

inline SimulateResult cmd_simulate(const SimulateOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.design != "three-model") validate_adam_config(opts.adam);
  SimulateResult res;
  const json config = simulate_config_json(opts);
  res.summary_json = json{{"config", config}};
  fs::create_directories(opts.outdir);
  const std::string comment = config.dump();

  if (opts.design == "three-model") {
    auto regimes = opts.regimes.empty() ? default_regimes() : opts.regimes;
    auto [series, labels] = gen_three_model(regimes, opts.seed);
    res.y = series.y;
    res.regime_labels = labels;
    std::vector<GaussianExpert> experts;
    for (const auto& r : regimes) experts.push_back({r.mean, r.variance});

    CsvWriter wcsv(fs::path(opts.outdir) / "weights.csv", comment,
                   {"alpha", "c", "t", "model", "weight"});
    json combos = json::array();
    for (double alpha : opts.alphas)
      for (double c : opts.cs) {
        WeightGridEntry entry;
        entry.alpha = alpha;
        entry.c = c;
        entry.weights = run_gaussian_dma(experts, series.y, alpha, c);
        for (Eigen::Index t = 0; t < entry.weights.rows(); ++t)
          for (Eigen::Index k = 0; k < entry.weights.cols(); ++k)
            wcsv.row({fmt_double(alpha), fmt_double(c), fmt_int(t + 1), fmt_int(k + 1),
                      fmt_double(entry.weights(t, k))});
        json combo{{"alpha", alpha}, {"c", c}};
        combo["final_weights"] = std::vector<double>(
            entry.weights.row(entry.weights.rows() - 1).begin(),
            entry.weights.row(entry.weights.rows() - 1).end());
        combos.push_back(combo);
        res.weight_grid.push_back(std::move(entry));
      }
    wcsv.close();
    res.summary_json["combos"] = combos;
    write_text_file(fs::path(opts.outdir) / "summary.json", res.summary_json.dump(2) + "\n");
    return res;
  }

  if (opts.reps < 1) throw validation_error("simulate: reps must be >= 1");
  if (opts.T < 2) throw validation_error("simulate: T must be >= 2");
  res.lambda_paths.resize(opts.reps, opts.T);
  parallel_for(static_cast<std::size_t>(opts.reps), opts.parallelism, [&](std::size_t rep) {
    DataSourceConfig src;
    src.design = opts.design;
    src.T = opts.T;
    src.d = opts.d;
    src.seed = derive_seed(opts.seed, rep);
    src.noise_sd = opts.noise_sd;
    src.lambda_true = opts.lambda_true;
    src.g = opts.g;
    src.theta0 = opts.theta0;
    src.breaks = opts.breaks;
    SimSeries series = generate_series(src);
    AfRun run = run_af_dlm(series.X, series.y, opts.g, opts.adam);
    res.lambda_paths.row(static_cast<Eigen::Index>(rep)) = run.lambda_path.transpose();
  });
  res.summary = lambda_path_summary(res.lambda_paths);
  res.lambda_min = res.lambda_paths.minCoeff();
  res.lambda_max = res.lambda_paths.maxCoeff();

  CsvWriter paths(fs::path(opts.outdir) / "lambda_paths.csv", comment, {"rep", "t", "lambda"});
  for (int rep = 0; rep < opts.reps; ++rep)
    for (int t = 0; t < opts.T; ++t)
      paths.row({fmt_int(rep + 1), fmt_int(t + 1), fmt_double(res.lambda_paths(rep, t))});
  paths.close();

  CsvWriter summary(fs::path(opts.outdir) / "lambda_summary.csv", comment,
                    {"t", "median", "q1", "q3"});
  for (int t = 0; t < opts.T; ++t)
    summary.row({fmt_int(t + 1), fmt_double(res.summary.median[t]), fmt_double(res.summary.q1[t]),
                 fmt_double(res.summary.q3[t])});
  summary.close();

  res.summary_json["lambda_min"] = res.lambda_min;
  res.summary_json["lambda_max"] = res.lambda_max;
  res.summary_json["lambda_final_median"] = res.summary.median[opts.T - 1];
  write_text_file(fs::path(opts.outdir) / "summary.json", res.summary_json.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------
// Standalone data generation

struct GenDataOptions {
  std::string design = "static";  // static | abrupt | drift | three-model
  int T = 1000;
  int d = 5;
  std::uint64_t seed = 1;
  double noise_sd = 1.0;
  double lambda_true = 0.95;
  double g = 100.0;
  std::vector<double> theta0;
  std::vector<CoefBreak> breaks;
  std::vector<Regime> regimes;
  std::string out_path = "data.csv";
};

inline void cmd_gen_data(const GenDataOptions& opts) {
  json config{{"command", "gen-data"}, {"design", opts.design}, {"seed", opts.seed}};
  if (opts.design == "three-model") {
    auto regimes = opts.regimes.empty() ? default_regimes() : opts.regimes;
    json regs = json::array();
    for (const auto& r : regimes)
      regs.push_back(json{{"mean", r.mean}, {"variance", r.variance}, {"length", r.length}});
    config["regimes"] = regs;
    auto [series, labels] = gen_three_model(regimes, opts.seed);
    CsvWriter out(opts.out_path, config.dump(), {"t", "y", "regime"});
    for (Eigen::Index t = 0; t < series.y.size(); ++t)
      out.row({fmt_int(t + 1), fmt_double(series.y[t]),
               fmt_int(labels[static_cast<std::size_t>(t)] + 1)});
    return;
  }

  DataSourceConfig src;
  src.design = opts.design;
  src.T = opts.T;
  src.d = opts.d;
  src.seed = opts.seed;
  src.noise_sd = opts.noise_sd;
  src.lambda_true = opts.lambda_true;
  src.g = opts.g;
  src.theta0 = opts.theta0;
  src.breaks = opts.breaks;
  config["data"] = to_json(src);
  SimSeries series = generate_series(src);

  std::vector<std::string> cols{"t", "y"};
  for (Eigen::Index j = 0; j < series.X.cols(); ++j) cols.push_back("x" + std::to_string(j + 1));
  CsvWriter out(opts.out_path, config.dump(), cols);
  for (Eigen::Index t = 0; t < series.y.size(); ++t) {
    std::vector<std::string> cells{fmt_int(t + 1), fmt_double(series.y[t])};
    for (Eigen::Index j = 0; j < series.X.cols(); ++j) cells.push_back(fmt_double(series.X(t, j)));
    out.row(cells);
  }
}

}  // namespace adma
