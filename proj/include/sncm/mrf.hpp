#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sncm/relmatrix.hpp"
#include "sncm/rng.hpp"

namespace sncm {

using BitVector = std::vector<std::uint8_t>;

/**
 * Ising-type prior on inclusion indicators,
 *
 *   P(gamma) proportional to exp(omega * sum(gamma) + eta * gamma' R gamma).
 *
 * Keeps a sparse neighbor list of R so conditional log-odds cost O(degree).
 */
class MrfPrior {
 public:
  struct Neighbor {
    std::size_t index;
    double weight;
  };

  MrfPrior(double omega, double eta, RelationshipMatrix relationships);
  /// Independent Bernoulli(logit^-1(omega)) prior on p predictors.
  static MrfPrior independent(double omega, std::size_t p);

  double omega() const { return omega_; }
  double eta() const { return eta_; }
  std::size_t size() const { return neighbors_.size(); }
  const RelationshipMatrix& relationships() const { return *relationships_; }
  std::span<const Neighbor> neighbors(std::size_t j) const { return neighbors_[j]; }
  bool is_independent() const { return eta_ == 0.0 || edge_count_ == 0; }

  /// Same R, different eta.
  MrfPrior with_eta(double eta) const;

  /// sum_{j' != j} r_{j j'} gamma_{j'}
  double neighbor_sum(std::size_t j, std::span<const std::uint8_t> gamma) const;
  /// omega + 2 eta * neighbor_sum
  double conditional_log_odds(std::size_t j, std::span<const std::uint8_t> gamma) const;

 private:
  double omega_;
  double eta_;
  std::shared_ptr<const RelationshipMatrix> relationships_;
  std::vector<std::vector<Neighbor>> neighbors_;
  std::size_t edge_count_ = 0;
};

double log_prior_unnorm(std::span<const std::uint8_t> gamma, const MrfPrior& prior);
double conditional_inclusion_prob(std::size_t j, std::span<const std::uint8_t> gamma,
                                  const MrfPrior& prior);

/// Systematic-scan Gibbs draws from the prior, one stored state per sweep.
std::vector<BitVector> sample_prior(const MrfPrior& prior, std::size_t draws, std::size_t burn_in,
                                    Rng& rng);
/// Same chain as sample_prior, keeping only the model size of each draw.
std::vector<std::size_t> sample_prior_sizes(const MrfPrior& prior, std::size_t draws,
                                            std::size_t burn_in, Rng& rng);

/// Smallest k with P(Binomial(n, prob) <= k) >= q.
std::size_t binomial_quantile(std::size_t n, double prob, double q);
/// Smallest observed value x with empirical CDF(x) >= q.
std::size_t empirical_quantile(std::span<const std::size_t> values, double q);

struct EtaSearchSpec {
  double omega0 = 0.0;
  std::vector<double> candidates;
  std::size_t prior_draws = 20000;
  std::size_t burn_in = 5000;
  double percentile = 0.95;

  void validate() const;
};

struct EtaCandidate {
  double eta = 0.0;
  std::size_t quantile_size = 0;  // sampled model-size percentile
  double quantile_se = 0.0;       // batch-means standard error of that percentile
  double mean_size = 0.0;
  bool qualifies = false;
};

struct EtaSelection {
  double eta = 0.0;
  std::size_t reference_size = 0;  // percentile of Binomial(p, 2 logit^-1(omega0))
  std::vector<EtaCandidate> table;
};

/**
 * Largest candidate eta whose sampled prior model-size percentile does not
 * exceed the same percentile of the independent prior with doubled
 * inclusion probability. Candidate k runs on stream rng.split(k); the result
 * does not depend on `threads`.
 */
EtaSelection select_eta(const EtaSearchSpec& spec, const RelationshipMatrix& relationships,
                        const Rng& rng, std::size_t threads = 1);

/// {0.01, ..., 1.00} / max(R)
std::vector<double> simulation_eta_grid(const RelationshipMatrix& relationships);
/// {0.01, ..., 1.00}
std::vector<double> analysis_eta_grid();

}  // namespace sncm
