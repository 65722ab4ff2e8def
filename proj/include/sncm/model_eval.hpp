#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sncm/gibbs.hpp"

namespace sncm {

struct WaicPart {
  double elpd = 0.0;
  double p_waic = 0.0;  // sum of pointwise log-likelihood variances
  Eigen::VectorXd pointwise;
};

struct IsPart {
  double elpd = 0.0;
  Eigen::VectorXd pointwise;
  Eigen::VectorXd max_weight;      // largest normalized importance weight per row
  std::size_t unstable_points = 0; // rows with max_weight > 0.5
};

struct ElpdReport {
  double elpd_is = 0.0;
  double elpd_waic = 0.0;
  double p_waic = 0.0;
  Eigen::VectorXd pointwise_is;
  Eigen::VectorXd pointwise_waic;
  std::size_t unstable_is_points = 0;
};

/// pointwise: log mean_s exp(ll_si) - var_s(ll_si), sample variance over draws.
WaicPart elpd_waic(const Eigen::MatrixXd& loglik);
/// pointwise: -log mean_s exp(-ll_si) (harmonic-mean conditional predictive ordinate).
IsPart elpd_is(const Eigen::MatrixXd& loglik);
ElpdReport elpd_report(const Eigen::MatrixXd& loglik);

/// Stacks the per-draw log-likelihood matrices of several chains (draws x n).
Eigen::MatrixXd pooled_loglik(std::span<const PosteriorChain> chains);

/// Sum of per-model ELPD totals and pointwise contributions (rows must align).
ElpdReport aggregate_elpd(std::span<const ElpdReport> per_model);

/// One synthetic response vector from the generative model; empty entries are PMVs.
using PredictiveDraw = std::vector<std::optional<double>>;

/**
 * For each of `draws_out` posterior states picked uniformly (with
 * replacement) from the pooled chains, simulate Z, V, U for every row of
 * `data` and censor at data.psi: a row is observed iff U = 1 and V >= psi.
 */
std::vector<PredictiveDraw> posterior_predictive_sample(std::span<const PosteriorChain> chains,
                                                        const CensoredDataset& data,
                                                        std::size_t draws_out, Rng& rng);

}  // namespace sncm
