#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sncm/mrf.hpp"

namespace sncm {

/**
 * Response with point mass values (PMVs), predictors and confounders.
 *
 * y[i] is empty for a PMV. Every observed y[i] must be >= psi.
 */
struct CensoredDataset {
  std::vector<std::optional<double>> y;
  Eigen::MatrixXd X;  // n x p, predictors under selection
  Eigen::MatrixXd C;  // n x s, confounders (s may be 0)
  double psi = 0.0;

  std::string response_name = "y";
  std::vector<std::string> predictor_names;
  std::vector<std::string> confounder_names;

  std::size_t n() const { return y.size(); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t s() const { return static_cast<std::size_t>(C.cols()); }
  bool observed(std::size_t i) const { return y[i].has_value(); }
  std::size_t observed_count() const;
  /// Fraction of rows with an observed response (W-bar).
  double observed_fraction() const;
  /// min{ y_i : W_i = 1 }; throws if nothing is observed.
  double min_observed() const;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct Hyperparams {
  double nu0_sq = 25.0;  // intercept prior variance
  double nu_sq = 4.0;    // slab variance
  double nud_sq = 25.0;  // skewness prior variance
  std::vector<double> lambda_sq;  // confounder prior variances, length s
  double xi0 = 5.0;               // sigma^2 ~ InvGamma(xi0/2, xi0*sigma0_sq/2)
  double sigma0_sq = 4.0;
  double rho0 = 1.0;  // rho ~ Beta(rho0, rho1)
  double rho1 = 1.0;
  MrfPrior selection;

  explicit Hyperparams(MrfPrior selection_prior) : selection(std::move(selection_prior)) {}

  void validate(std::size_t p, std::size_t s) const;

  /// nu0^2 = nud^2 = 25, nu^2 = 4, xi0 = 5, sigma0^2 = 4, omega = logit(0.02), independent.
  static Hyperparams simulation_defaults(std::size_t p);
  /// nu0^2 = nud^2 = lambda^2 = 100, (xi0, sigma0^2) = (3, 1), omega = logit(0.05), independent.
  static Hyperparams analysis_defaults(std::size_t p, std::size_t s);
};

/// All latent and parameter values at one sweep.
struct ModelState {
  double beta0 = 0.0;
  Eigen::VectorXd beta_star;  // p
  BitVector gamma;            // p
  Eigen::VectorXd alpha;      // s
  double sigma_sq = 1.0;
  double delta = 0.0;
  double rho = 0.5;
  Eigen::VectorXd V;  // n
  BitVector U;        // n
  Eigen::VectorXd Z;  // n, strictly positive

  /// gamma_j * beta*_j
  Eigen::VectorXd effective_beta() const;
  std::size_t model_size() const;

  /// Checks the latent-variable constraints against `data`; returns a message or empty.
  std::string check_invariants(const CensoredDataset& data) const;
};

/// beta0 + sum_j gamma_j beta*_j x_ij + sum_t alpha_t c_it
double linear_predictor(const ModelState& state, const CensoredDataset& data, std::size_t i);

/**
 * Observed-data log-likelihood of one row given its linear predictor:
 *   W=1: log(rho * f_SN(y))        W=0: log(1 - rho + rho * F_SN(psi)).
 * Returns -inf (never NaN) when rho sits on a boundary incompatible with the row.
 */
double obs_loglik_point(const std::optional<double>& y, double mu, double sigma_sq, double delta,
                        double rho, double psi);
double obs_loglik_i(const ModelState& state, const CensoredDataset& data, std::size_t i);

/**
 * Augmented log-likelihood with Z_i ~ |N(0,1)| entering as delta * Z_i:
 *   log[(1-rho)^(1-U) rho^U] + log(2 phi(Z)) + log(phi((V - mu - delta Z)/sigma) / sigma).
 * Throws std::domain_error if Z_i <= 0.
 */
double aug_loglik_i(const ModelState& state, const CensoredDataset& data, std::size_t i);

}  // namespace sncm
