// Command-line front end: simulate | backtest | gen-data | report.
// Exit codes: 0 success, 1 invalid input or config, 2 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adma/experiments.hpp"

namespace {

std::vector<adma::CoefBreak> parse_breaks(const std::string& text) {
  std::vector<adma::CoefBreak> breaks;
  if (text.empty()) return breaks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw adma::validation_error("breaks: expected time:multiplier, got '" + item + "'");
    breaks.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  return breaks;
}

std::vector<adma::Regime> parse_regimes(const std::string& text) {
  std::vector<adma::Regime> regimes;
  if (text.empty()) return regimes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream rs(item);
    std::string mean, var, len;
    if (!std::getline(rs, mean, ':') || !std::getline(rs, var, ':') || !std::getline(rs, len))
      throw adma::validation_error("regimes: expected mean:variance:length, got '" + item + "'");
    regimes.push_back({std::stod(mean), std::stod(var), std::stoi(len)});
  }
  return regimes;
}

void print_report(const adma::EvalReport& rep) {
  std::cout << "n_forecasts=" << rep.n_forecasts << " burn_in=" << rep.burn_in << "\n";
  for (const auto& [name, m] : rep.msfe) {
    std::cout << "  " << name << ": msfe=" << m;
    if (rep.msfe_ratio.count(name)) std::cout << " ratio=" << rep.msfe_ratio.at(name);
    auto cw = rep.cw.find(name);
    if (cw != rep.cw.end()) {
      std::cout << " cw_p=" << cw->second.p_value;
      if (cw->second.p_value < 0.05) std::cout << " (+)";
    }
    std::cout << "\n";
  }
  for (const auto& [name, msg] : rep.errors)
    std::cout << "  error " << name << ": " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive dynamic model averaging toolkit"};
  app.require_subcommand(1);

  // simulate ---------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Replicated generator studies");
  adma::SimulateOptions sopts;
  std::string sim_breaks, sim_regimes;
  sim->add_option("--design", sopts.design, "static|abrupt|drift|three-model")
      ->check(CLI::IsMember({"static", "abrupt", "drift", "three-model"}));
  sim->add_option("--reps", sopts.reps, "replications");
  sim->add_option("--T", sopts.T, "series length");
  sim->add_option("--d", sopts.d, "covariate dimension (drift)");
  sim->add_option("--seed", sopts.seed, "master seed");
  sim->add_option("--noise-sd", sopts.noise_sd, "observation noise sd");
  sim->add_option("--lambda-true", sopts.lambda_true, "drift generator forgetting");
  sim->add_option("--g", sopts.g, "prior scale");
  sim->add_option("--gamma", sopts.adam.gamma, "tuner learning rate");
  sim->add_option("--beta1", sopts.adam.beta1, "tuner first-moment decay");
  sim->add_option("--beta2", sopts.adam.beta2, "tuner second-moment decay");
  sim->add_option("--lambda-init", sopts.adam.lambda_init, "initial forgetting");
  sim->add_option("--lambda-min", sopts.adam.lambda_min, "lower forgetting bound");
  sim->add_option("--lambda-max", sopts.adam.lambda_max, "upper forgetting bound");
  sim->add_option("--theta0", sopts.theta0, "coefficients (comma separated)")->delimiter(',');
  sim->add_option("--breaks", sim_breaks, "abrupt breaks time:mult[,time:mult...]");
  sim->add_option("--alpha", sopts.alphas, "three-model weight forgetting grid")->delimiter(',');
  sim->add_option("--c", sopts.cs, "three-model comeback floor grid")->delimiter(',');
  sim->add_option("--regimes", sim_regimes, "three-model mean:variance:length list");
  sim->add_option("--outdir", sopts.outdir, "output directory");
  sim->add_option("--parallelism", sopts.parallelism, "worker threads");

  // backtest ---------------------------------------------------------------
  auto* bt = app.add_subcommand("backtest", "One-step-ahead forecasting comparison");
  std::string bt_config, bt_csv, bt_response = "y", bt_benchmark, bt_outdir;
  bool bt_lag = false, bt_allow_large = false;
  int bt_burn_in = -1, bt_hac = -1, bt_parallelism = 0, bt_dmax = 0;
  bt->add_option("--config", bt_config, "JSON config file");
  bt->add_option("--csv", bt_csv, "input dataset (overrides config data)");
  bt->add_option("--response", bt_response, "response column name");
  bt->add_flag("--lag-predictors", bt_lag, "pair y[t] with predictors from t-1");
  bt->add_option("--benchmark", bt_benchmark, "benchmark strategy name");
  bt->add_option("--burn-in", bt_burn_in, "records excluded from scoring");
  bt->add_option("--hac-lags", bt_hac, "Bartlett lags for the forecast test");
  bt->add_option("--outdir", bt_outdir, "output directory");
  bt->add_option("--parallelism", bt_parallelism, "worker threads");
  bt->add_option("--d-max", bt_dmax, "predictor count guard");
  bt->add_flag("--allow-large", bt_allow_large, "permit pools beyond d-max");

  // gen-data ---------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "Write a generated series as CSV");
  adma::GenDataOptions gopts;
  std::string gen_breaks, gen_regimes;
  gen->add_option("--design", gopts.design, "static|abrupt|drift|three-model")
      ->check(CLI::IsMember({"static", "abrupt", "drift", "three-model"}));
  gen->add_option("--T", gopts.T, "series length");
  gen->add_option("--d", gopts.d, "covariate dimension (drift)");
  gen->add_option("--seed", gopts.seed, "seed");
  gen->add_option("--noise-sd", gopts.noise_sd, "observation noise sd");
  gen->add_option("--lambda-true", gopts.lambda_true, "drift generator forgetting");
  gen->add_option("--g", gopts.g, "drift lockstep prior scale");
  gen->add_option("--theta0", gopts.theta0, "coefficients (comma separated)")->delimiter(',');
  gen->add_option("--breaks", gen_breaks, "abrupt breaks time:mult[,...]");
  gen->add_option("--regimes", gen_regimes, "three-model mean:variance:length list");
  gen->add_option("--out", gopts.out_path, "output CSV path");

  // report -----------------------------------------------------------------
  auto* rp = app.add_subcommand("report", "Recompute scores from records.csv");
  adma::ReportOptions ropts;
  rp->add_option("--records", ropts.records_path, "records.csv path")->required();
  rp->add_option("--benchmark", ropts.benchmark, "benchmark strategy name");
  rp->add_option("--burn-in", ropts.burn_in, "records excluded from scoring");
  rp->add_option("--hac-lags", ropts.hac_lags, "Bartlett lags");
  rp->add_option("--out", ropts.out_path, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sim) {
      sopts.breaks = parse_breaks(sim_breaks);
      sopts.regimes = parse_regimes(sim_regimes);
      adma::SimulateResult res = adma::cmd_simulate(sopts);
      std::cout << "simulate " << sopts.design << " -> " << sopts.outdir << "\n";
      if (sopts.design != "three-model")
        std::cout << "  lambda final median=" << res.summary.median[sopts.T - 1]
                  << " min=" << res.lambda_min << " max=" << res.lambda_max << "\n";
    } else if (*bt) {
      adma::BacktestOptions opts;
      if (!bt_config.empty()) {
        std::ifstream in(bt_config);
        if (!in) throw adma::validation_error("cannot open config file: " + bt_config);
        adma::json j;
        try {
          j = adma::json::parse(in, nullptr, true, /*ignore_comments=*/true);
        } catch (const adma::json::exception& e) {
          throw adma::validation_error("config parse error: " + std::string(e.what()));
        }
        opts = adma::backtest_options_from_json(j);
      } else if (bt_csv.empty()) {
        throw adma::validation_error("backtest needs --config or --csv");
      }
      if (!bt_csv.empty()) {
        opts.data = adma::DataSourceConfig{};
        opts.data.csv_path = bt_csv;
        opts.data.response = bt_response;
        opts.data.lag_predictors = bt_lag;
      }
      if (!bt_benchmark.empty()) opts.benchmark = bt_benchmark;
      if (bt_burn_in >= 0) opts.burn_in = bt_burn_in;
      if (bt_hac >= 0) opts.hac_lags = bt_hac;
      if (bt_parallelism > 0) opts.parallelism = bt_parallelism;
      if (bt_dmax > 0) opts.limits.d_max = bt_dmax;
      if (bt_allow_large) opts.limits.allow_large = true;
      if (!bt_outdir.empty()) opts.outdir = bt_outdir;

      if (opts.strategies.empty() && opts.benchmark.empty()) opts.benchmark = "AR1";
      adma::BacktestResult res = adma::cmd_backtest(opts);
      std::cout << "backtest -> " << opts.outdir << "\n";
      print_report(res.report);
    } else if (*gen) {
      gopts.breaks = parse_breaks(gen_breaks);
      gopts.regimes = parse_regimes(gen_regimes);
      adma::cmd_gen_data(gopts);
      std::cout << "gen-data " << gopts.design << " -> " << gopts.out_path << "\n";
    } else if (*rp) {
      adma::json rep = adma::cmd_report(ropts);
      std::cout << "report -> " << ropts.out_path << "\n";
      for (auto& [name, m] : rep.at("msfe").items())
        std::cout << "  " << name << ": msfe=" << m.dump() << "\n";
    }
  } catch (const adma::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const adma::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
