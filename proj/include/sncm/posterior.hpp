#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sncm/gibbs.hpp"

namespace sncm {

struct SelectionResult {
  std::vector<double> pip;
  /// Smallest PIP admitted; empty when no nonempty set meets the FDR target.
  std::optional<double> threshold;
  std::vector<std::size_t> selected;
  /// E[beta*_j | gamma_j = 1]; set only for selected predictors.
  std::vector<std::optional<double>> beta_hat;
  Eigen::VectorXd alpha_hat;
  double beta0_hat = 0.0;
  double sigma_sq_hat = 0.0;
  double delta_hat = 0.0;
  double rho_hat = 0.0;
};

/// Mean of gamma_j over the pooled draws of all chains.
std::vector<double> compute_pips(std::span<const PosteriorChain> chains);

/**
 * Bayesian-FDR threshold: scanning unique PIP values in decreasing order,
 * the smallest t such that mean(1 - pip_j : pip_j >= t) <= target.
 * Returns nullopt ("select none") when even the top tier fails.
 */
std::optional<double> bayesian_fdr_threshold(std::span<const double> pips, double target = 0.05);
std::vector<std::size_t> select_at(std::span<const double> pips, std::optional<double> threshold);

/// Mean of beta*_j over draws with gamma_j = 1; nullopt when no such draw exists.
std::vector<std::optional<double>> conditional_beta_estimates(std::span<const PosteriorChain> chains);

/// PIPs, FDR selection and posterior means in one pass.
SelectionResult summarize(std::span<const PosteriorChain> chains, double fdr_target = 0.05);

/// Applies one FDR threshold to the PIPs of many response models pooled together.
std::optional<double> pooled_fdr_threshold(std::span<const std::vector<double>> pips_per_model,
                                           double target = 0.05);

struct ParameterDiagnostics {
  std::string name;
  std::vector<double> chain_means;
  double rhat = 1.0;  // rank-normalized split potential scale reduction
  double ess = 0.0;   // multi-chain effective sample size
  bool flagged = false;  // rhat > 1.1
};

/// Scalar parameters tracked for convergence: beta0, sigma_sq, delta, rho, model size, alpha_t, beta_j.
std::vector<std::pair<std::string, std::vector<std::vector<double>>>> scalar_traces(
    std::span<const PosteriorChain> chains);

/// Rank-normalized split-Rhat over equally long chains; never below 1.
double split_rhat(const std::vector<std::vector<double>>& chains);
/// Multi-chain ESS with Geyer's initial monotone sequence truncation.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Requires at least two chains.
std::vector<ParameterDiagnostics> convergence_report(std::span<const PosteriorChain> chains);

/// Affine map z = (y - center) / scale applied to the response.
struct ResponseTransform {
  double center = 0.0;
  double scale = 1.0;
  double forward(double y) const { return (y - center) / scale; }
  double backward(double z) const { return z * scale + center; }
  /// Coefficient on the original response scale.
  double coefficient_to_original(double b) const { return b * scale; }
};

/// PMVs replaced by half the minimum observed value.
std::vector<double> half_min_imputed(const CensoredDataset& data);

/**
 * Standardizes the response with constants computed on the half-minimum
 * imputed vector, maps observed values and psi through the same affine map
 * and keeps PMVs missing.
 */
std::pair<CensoredDataset, ResponseTransform> standardize_with_pmv(const CensoredDataset& data);

/**
 * Variance of the p single-predictor least-squares slopes, each fit adjusting
 * for the confounders, on the half-minimum imputed, z-standardized response.
 */
double empirical_slab_variance(const CensoredDataset& data);

struct BetaPrior {
  double rho0;
  double rho1;
};

inline constexpr double kRho1Floor = 0.01;

/// rho0 = 5 sqrt(W), rho1 = 5 (1 - sqrt(W)) floored at kRho1Floor.
BetaPrior adaptive_beta_prior(double observed_fraction);

}  // namespace sncm
