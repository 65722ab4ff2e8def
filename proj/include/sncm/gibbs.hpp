#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "sncm/model.hpp"
#include "sncm/rng.hpp"

namespace sncm {

enum class ErrorModel { skew_normal, normal };

const char* to_string(ErrorModel m);
ErrorModel error_model_from_string(const std::string& s);

struct McmcConfig {
  std::size_t iterations = 150000;  // total sweeps, burn-in included
  std::size_t burn_in = 25000;
  std::size_t thin = 25;
  std::size_t chains = 1;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t stored_draws() const { return (iterations - burn_in) / thin; }

  /// 125,000 kept sweeps after 25,000 burn-in, 1 in 25 retained.
  static McmcConfig simulation_defaults();
  /// 300,000 kept sweeps after 30,000 burn-in, 1 in 20 retained, 3 chains.
  static McmcConfig analysis_defaults();
};

struct SamplerOptions {
  ErrorModel error_model = ErrorModel::skew_normal;  // normal: delta fixed at 0
  bool fix_rho_one = false;     // every PMV treated as censored (rho = 1, U = 1)
  bool store_loglik = true;     // per-draw, per-row observed-data log-likelihood
  bool store_latents = true;    // keep V, U, Z in stored draws
};

/// Thinned post-burn-in draws of one chain.
struct PosteriorChain {
  std::vector<ModelState> draws;
  Eigen::MatrixXd loglik;  // draws x n; empty unless store_loglik
  McmcConfig config;
  SamplerOptions options;
  std::uint64_t seed = 0;  // stream seed of this chain
  std::size_t chain_index = 0;
};

/// Gaussian full conditional of the coefficient block (beta0, active beta*, alpha, delta).
struct CoefficientPosterior {
  std::vector<std::size_t> active;  // predictor indices, in block order after beta0
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/**
 * Data-augmentation Gibbs sampler for the skew-normal censored mixture.
 *
 * A sweep runs, in order: Z, (V, U), coefficient block, gamma scan,
 * sigma^2, rho. Each update draws from the exact full conditional given the
 * current values of everything else, so the individual updates are usable
 * on their own (tests exercise them one at a time).
 *
 * The sampler keeps the linear predictor mu and the residual
 * e = V - mu - delta*Z in sync with the state; set_state() rebuilds both.
 */
class GibbsSampler {
 public:
  GibbsSampler(const CensoredDataset& data, const Hyperparams& hyper, SamplerOptions options = {});

  ModelState initial_state(Rng& rng) const;
  void set_state(ModelState state);
  const ModelState& state() const { return state_; }

  void update_Z(Rng& rng);
  void update_V_U(Rng& rng);
  void update_coefficients(Rng& rng);
  void update_gamma(Rng& rng);
  void update_sigma_sq(Rng& rng);
  void update_rho(Rng& rng);
  void sweep(Rng& rng);
  /// As sweep(rng), with the rho update drawing from `rho_rng`.
  void sweep(Rng& rng, Rng& rho_rng);

  CoefficientPosterior coefficient_posterior() const;
  /// Observed-data log-likelihood of every row at the current state.
  Eigen::VectorXd observed_loglik() const;
  const Eigen::VectorXd& linear_predictor() const { return mu_; }
  const Eigen::VectorXd& residual() const { return resid_; }

  const CensoredDataset& data() const { return data_; }
  const Hyperparams& hyper() const { return hyper_; }
  const SamplerOptions& options() const { return options_; }

 private:
  struct CoefficientBlock {
    std::vector<std::size_t> active;
    Eigen::MatrixXd design;  // [1, X_active, C, Z (skew-normal only)]
    Eigen::VectorXd rhs;
    Eigen::LLT<Eigen::MatrixXd> llt;  // of the posterior precision
  };
  CoefficientBlock assemble_block() const;
  void refresh_caches();
  bool skew() const { return options_.error_model == ErrorModel::skew_normal; }

  const CensoredDataset& data_;
  const Hyperparams& hyper_;
  SamplerOptions options_;
  ModelState state_;

  std::vector<std::size_t> pmv_rows_;
  Eigen::VectorXd x_norm_sq_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd resid_;
};

/// One chain on stream `rng`; throws std::runtime_error on a non-finite state.
PosteriorChain run_chain(const CensoredDataset& data, const Hyperparams& hyper,
                         const McmcConfig& config, const SamplerOptions& options, Rng rng,
                         std::size_t chain_index = 0);

/// config.chains chains; chain c uses Rng(config.seed).split(c).
std::vector<PosteriorChain> run_chains(const CensoredDataset& data, const Hyperparams& hyper,
                                       const McmcConfig& config, const SamplerOptions& options,
                                       std::size_t threads = 1);

}  // namespace sncm
