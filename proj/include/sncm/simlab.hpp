#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sncm/gibbs.hpp"
#include "sncm/model_eval.hpp"
#include "sncm/posterior.hpp"
#include "sncm/relmatrix.hpp"

namespace sncm {

enum class ScenarioName {
  baseline,
  high_variance,
  high_censoring,
  high_skewness,
  misspecified_R,
  lognormal_errors,
  correlated_predictors,
  large_n,
};

inline constexpr std::array<ScenarioName, 8> kAllScenarios = {
    ScenarioName::baseline,         ScenarioName::high_variance,   ScenarioName::high_censoring,
    ScenarioName::high_skewness,    ScenarioName::misspecified_R,  ScenarioName::lognormal_errors,
    ScenarioName::correlated_predictors, ScenarioName::large_n};

const char* to_string(ScenarioName s);
ScenarioName scenario_from_string(const std::string& s);

enum class ErrorFamily { skew_normal, log_normal };

struct SimScenario {
  ScenarioName name = ScenarioName::baseline;
  std::size_t n = 400;
  std::size_t p = 300;
  double beta0 = 5.0;
  Eigen::VectorXd beta;
  double sigma = 0.0;  // sd of the Gaussian error part
  double delta = 0.0;
  double rho = 0.8;
  double censor_prob = 0.20;  // target P(V < psi)
  double psi = 0.0;           // calibrated detection limit
  ErrorFamily error_family = ErrorFamily::skew_normal;
  double lognormal_meanlog = 0.0;
  double lognormal_sdlog = 0.0;
  bool correlated = false;  // X ~ MVN(0, R with unit diagonal)
  bool permute_R = false;   // fit with a freshly permuted R each replicate
  RelationshipMatrix R;
  Eigen::MatrixXd x_chol;   // lower Cholesky factor of the predictor covariance (correlated only)
  std::uint64_t calibration_seed = 0;

  /// Expected PMV rate: (1 - rho) + rho * censor_prob.
  double expected_pmv_rate() const { return (1.0 - rho) + rho * censor_prob; }
  double error_variance() const;
  double error_mean() const;
  std::vector<std::size_t> true_predictors() const;
};

/// Number of Monte-Carlo draws used to calibrate psi.
inline constexpr std::size_t kCalibrationDraws = 1000000;

/// Builds a scenario and calibrates psi as the censor_prob quantile of V's marginal.
SimScenario make_scenario(ScenarioName name, std::size_t calibration_draws = kCalibrationDraws);

/// One error draw from the scenario's error family.
double draw_error(const SimScenario& sc, Rng& rng);
/// One predictor row.
Eigen::VectorXd draw_predictors(const SimScenario& sc, Rng& rng);

struct SimReplicate {
  CensoredDataset data;  // psi set to the estimate min{y_i : W_i = 1}
  BitVector true_gamma;
  Eigen::VectorXd true_beta;
  RelationshipMatrix R_fit;  // R handed to the MRF prior
  double true_psi = 0.0;
  std::size_t index = 0;
};

SimReplicate generate_replicate(const SimScenario& sc, Rng& rng, std::size_t index = 0);

enum class PriorKind { independent, mrf };
enum class BaselineMethod { forced_rho_1, half_min_impute };

const char* to_string(PriorKind k);
const char* to_string(BaselineMethod m);

struct FitSettings {
  McmcConfig mcmc;
  double omega = -3.8918202981106265;  // logit(0.02)
  double eta = 0.0;                    // used by PriorKind::mrf
  ErrorModel error_model = ErrorModel::skew_normal;
  bool store_loglik = false;
  double fdr_target = 0.05;
};

struct FitOutcome {
  SelectionResult selection;
  std::vector<std::optional<double>> conditional_beta;  // for every predictor with any gamma_j = 1 draw
  std::optional<ElpdReport> elpd;
};

/// Simulation hyperparameters with the adaptive Beta(rho0, rho1) prior of `data`.
Hyperparams simulation_hyperparams(const CensoredDataset& data, PriorKind prior, const FitSettings& settings,
                                   const RelationshipMatrix& R_fit);

FitOutcome fit_dataset(const CensoredDataset& data, PriorKind prior, const FitSettings& settings,
                       const RelationshipMatrix& R_fit, const SamplerOptions& base_options, Rng rng);

/// PMVs replaced by psi_hat / 2; every row observed.
CensoredDataset half_min_dataset(const CensoredDataset& data);

/// Ad-hoc PMV treatments, both with independent Bernoulli priors.
FitOutcome run_baseline_methods(const CensoredDataset& data, BaselineMethod which,
                                const FitSettings& settings, Rng rng);

struct ReplicateScore {
  double tpr = 0.0;
  double fdr = 0.0;
  std::size_t selected = 0;
};

ReplicateScore score_replicate(const std::vector<std::size_t>& selected, const BitVector& truth);

struct MetricsReport {
  std::size_t replicates = 0;
  double overall_tpr = 0.0;
  double tpr_sd = 0.0;
  double fdr = 0.0;  // empty selection counts as FDR 0
  double fdr_sd = 0.0;
  std::vector<std::size_t> true_predictors;
  std::vector<double> variable_tpr;
  std::vector<double> bias;  // over replicates where the conditional estimate exists
  std::vector<double> rmse;
  std::vector<std::size_t> estimate_count;
};

struct ReplicateResult {
  std::vector<std::size_t> selected;
  std::vector<std::optional<double>> conditional_beta;
};

MetricsReport score(const std::vector<ReplicateResult>& results, const BitVector& truth,
                    const Eigen::VectorXd& true_beta);

/// Eta for the MRF fits of a scenario: prior-based search on the simulation grid.
EtaSelection tune_scenario_eta(const SimScenario& sc, double omega, const Rng& rng, std::size_t threads = 1);

}  // namespace sncm
