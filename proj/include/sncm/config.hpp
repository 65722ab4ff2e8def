#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sncm/gibbs.hpp"
#include "sncm/io.hpp"

namespace sncm {

/**
 * Settings shared by every subcommand. INI file with sections
 * [run] [data] [prior] [model] [mcmc] [selection] [simulate] [tune];
 * keys missing from the file keep their defaults.
 */
struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out = "sncm_out";

  // [data]
  std::vector<std::string> data_paths;
  std::string response;  // column list, "*" for every non-predictor column, empty for the first column
  std::vector<std::string> predictors;
  std::vector<std::string> confounders;
  std::string na_token = "NA";
  std::optional<double> psi;
  bool standardize = true;  // standardize the response with PMVs kept missing

  // [prior]
  std::string prior = "independent";  // independent | mrf
  double omega = -2.9444389791664403;  // logit(0.05)
  double eta = 0.0;
  bool tune_eta = false;  // choose eta with the prior-percentile search before fitting
  std::string relationship_path;
  std::string hierarchy_path;

  // [model]
  ErrorModel error_model = ErrorModel::skew_normal;
  double nu0_sq = 100.0;
  std::optional<double> nu_sq;  // empty: empirical slab variance
  double nud_sq = 100.0;
  double lambda_sq = 100.0;
  double xi0 = 3.0;
  double sigma0_sq = 1.0;
  std::optional<double> rho0;  // empty: adaptive Beta prior
  std::optional<double> rho1;

  // [mcmc]
  McmcConfig mcmc = McmcConfig::analysis_defaults();

  // [selection]
  double fdr_target = 0.05;
  bool pool_fdr = true;  // one threshold over all fitted responses

  // [simulate]
  std::string scenario = "baseline";
  std::size_t replicates = 50;

  // [tune]
  double tune_percentile = 0.95;
  std::size_t tune_draws = 20000;
  std::size_t tune_burn_in = 5000;
  std::string eta_grid = "analysis";  // analysis | simulation | comma separated values

  /// Type-checks every key; unknown sections or keys are errors.
  static RunConfig from_ini(const std::string& text);
  static RunConfig load(const std::string& path);
  /// `with_runtime` adds run.out and run.threads, which never change results.
  std::string to_ini(bool with_runtime = true) const;
  void validate() const;

  IngestOptions ingest_options() const;
  /// Hyperparameters for a dataset (nu_sq and the Beta prior filled in when not set).
  Hyperparams hyperparams(const CensoredDataset& data, const MrfPrior& selection) const;
};

}  // namespace sncm
