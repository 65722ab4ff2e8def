#include "sncm/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sncm/distributions.hpp"
#include "sncm/parallel.hpp"

namespace sncm {

MrfPrior::MrfPrior(double omega, double eta, RelationshipMatrix relationships)
    : omega_(omega),
      eta_(eta),
      relationships_(std::make_shared<const RelationshipMatrix>(std::move(relationships))) {
  if (!std::isfinite(omega_)) throw std::invalid_argument("MRF prior: omega must be finite");
  if (!(eta_ >= 0.0) || !std::isfinite(eta_))
    throw std::invalid_argument("MRF prior: eta must be finite and non-negative");
  const std::size_t p = relationships_->size();
  neighbors_.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      const double r = (*relationships_)(j, k);
      if (k != j && r != 0.0) {
        neighbors_[j].push_back({k, r});
        ++edge_count_;
      }
    }
  }
}

MrfPrior MrfPrior::independent(double omega, std::size_t p) {
  return MrfPrior(omega, 0.0, RelationshipMatrix::zeros(p));
}

MrfPrior MrfPrior::with_eta(double eta) const {
  MrfPrior copy = *this;
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("MRF prior: eta must be finite and non-negative");
  copy.eta_ = eta;
  return copy;
}

double MrfPrior::neighbor_sum(std::size_t j, std::span<const std::uint8_t> gamma) const {
  if (gamma.size() != size()) throw std::invalid_argument("MRF prior: gamma dimension mismatch");
  double s = 0.0;
  for (const auto& nb : neighbors_[j])
    if (gamma[nb.index]) s += nb.weight;
  return s;
}

double MrfPrior::conditional_log_odds(std::size_t j, std::span<const std::uint8_t> gamma) const {
  if (eta_ == 0.0) {
    if (gamma.size() != size()) throw std::invalid_argument("MRF prior: gamma dimension mismatch");
    return omega_;
  }
  return omega_ + 2.0 * eta_ * neighbor_sum(j, gamma);
}

double log_prior_unnorm(std::span<const std::uint8_t> gamma, const MrfPrior& prior) {
  if (gamma.size() != prior.size()) throw std::invalid_argument("MRF prior: gamma dimension mismatch");
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    if (!gamma[j]) continue;
    linear += 1.0;
    quad += prior.neighbor_sum(j, gamma);
  }
  return prior.omega() * linear + prior.eta() * quad;
}

double conditional_inclusion_prob(std::size_t j, std::span<const std::uint8_t> gamma,
                                  const MrfPrior& prior) {
  if (j >= prior.size()) throw std::invalid_argument("MRF prior: index out of range");
  return inv_logit(prior.conditional_log_odds(j, gamma));
}

namespace {

// Runs the prior chain and calls sink(gamma, size) once per kept sweep.
template <class Sink>
void run_prior_chain(const MrfPrior& prior, std::size_t draws, std::size_t burn_in, Rng& rng,
                     Sink&& sink) {
  const std::size_t p = prior.size();
  BitVector gamma(p, 0);
  std::vector<double> field(p, 0.0);  // neighbor sums for the current gamma
  std::size_t model_size = 0;
  const double two_eta = 2.0 * prior.eta();
  const double base_prob = inv_logit(prior.omega());
  const bool independent = prior.is_independent();
  for (std::size_t sweep = 0; sweep < burn_in + draws; ++sweep) {
    for (std::size_t j = 0; j < p; ++j) {
      const double prob = independent ? base_prob : inv_logit(prior.omega() + two_eta * field[j]);
      const std::uint8_t next = rng.uniform() < prob ? 1 : 0;
      if (next == gamma[j]) continue;
      gamma[j] = next;
      const double sign = next ? 1.0 : -1.0;
      model_size = next ? model_size + 1 : model_size - 1;
      if (!independent)
        for (const auto& nb : prior.neighbors(j)) field[nb.index] += sign * nb.weight;
    }
    if (sweep >= burn_in) sink(gamma, model_size);
  }
}

}  // namespace

std::vector<BitVector> sample_prior(const MrfPrior& prior, std::size_t draws, std::size_t burn_in,
                                    Rng& rng) {
  if (draws == 0) throw std::invalid_argument("sample_prior: draws must be positive");
  std::vector<BitVector> out;
  out.reserve(draws);
  run_prior_chain(prior, draws, burn_in, rng,
                  [&](const BitVector& g, std::size_t) { out.push_back(g); });
  return out;
}

std::vector<std::size_t> sample_prior_sizes(const MrfPrior& prior, std::size_t draws,
                                            std::size_t burn_in, Rng& rng) {
  if (draws == 0) throw std::invalid_argument("sample_prior: draws must be positive");
  std::vector<std::size_t> out;
  out.reserve(draws);
  run_prior_chain(prior, draws, burn_in, rng,
                  [&](const BitVector&, std::size_t size) { out.push_back(size); });
  return out;
}

std::size_t binomial_quantile(std::size_t n, double prob, double q) {
  if (!(prob >= 0.0 && prob <= 1.0) || !(q > 0.0 && q < 1.0))
    throw std::invalid_argument("binomial_quantile: invalid arguments");
  if (prob == 0.0) return 0;
  if (prob == 1.0) return n;
  const double nn = static_cast<double>(n);
  double cdf = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double log_pmf = std::lgamma(nn + 1) - std::lgamma(kk + 1) - std::lgamma(nn - kk + 1) +
                           kk * std::log(prob) + (nn - kk) * std::log1p(-prob);
    cdf += std::exp(log_pmf);
    if (cdf >= q - 1e-12) return k;
  }
  return n;
}

std::size_t empirical_quantile(std::span<const std::size_t> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: no values");
  std::vector<std::size_t> sorted(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  const std::size_t idx = std::clamp<std::size_t>(rank, 1, sorted.size()) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  return sorted[idx];
}

void EtaSearchSpec::validate() const {
  if (!std::isfinite(omega0)) throw std::invalid_argument("eta search: omega0 must be finite");
  if (candidates.empty()) throw std::invalid_argument("eta search: no candidates");
  if (!std::is_sorted(candidates.begin(), candidates.end()))
    throw std::invalid_argument("eta search: candidates must be ascending");
  if (candidates.front() < 0.0) throw std::invalid_argument("eta search: candidates must be non-negative");
  if (prior_draws == 0) throw std::invalid_argument("eta search: prior_draws must be positive");
  if (!(percentile > 0.0 && percentile < 1.0))
    throw std::invalid_argument("eta search: percentile must lie in (0,1)");
}

EtaSelection select_eta(const EtaSearchSpec& spec, const RelationshipMatrix& relationships,
                        const Rng& rng, std::size_t threads) {
  spec.validate();
  const std::size_t p = relationships.size();
  EtaSelection result;
  const double doubled = std::min(1.0, 2.0 * inv_logit(spec.omega0));
  result.reference_size = binomial_quantile(p, doubled, spec.percentile);
  result.table.resize(spec.candidates.size());

  const MrfPrior base(spec.omega0, 0.0, relationships);
  constexpr std::size_t kBatches = 10;
  parallel_for(spec.candidates.size(), threads, [&](std::size_t k) {
    Rng stream = rng.split(k);
    const MrfPrior prior = base.with_eta(spec.candidates[k]);
    const auto sizes = sample_prior_sizes(prior, spec.prior_draws, spec.burn_in, stream);
    EtaCandidate& row = result.table[k];
    row.eta = spec.candidates[k];
    row.quantile_size = empirical_quantile(sizes, spec.percentile);
    row.mean_size = std::accumulate(sizes.begin(), sizes.end(), 0.0) / static_cast<double>(sizes.size());
    const std::size_t batch = sizes.size() / kBatches;
    if (batch > 0) {
      std::vector<double> qs;
      for (std::size_t b = 0; b < kBatches; ++b) {
        std::span<const std::size_t> part(sizes.data() + b * batch, batch);
        qs.push_back(static_cast<double>(empirical_quantile(part, spec.percentile)));
      }
      const double m = std::accumulate(qs.begin(), qs.end(), 0.0) / kBatches;
      double ss = 0.0;
      for (double v : qs) ss += (v - m) * (v - m);
      row.quantile_se = std::sqrt(ss / (kBatches - 1) / kBatches);
    }
    row.qualifies = row.quantile_size <= result.reference_size;
  });

  result.eta = 0.0;
  for (const auto& row : result.table)
    if (row.qualifies) result.eta = std::max(result.eta, row.eta);
  return result;
}

std::vector<double> simulation_eta_grid(const RelationshipMatrix& relationships) {
  const double r = relationships.max_entry();
  if (!(r > 0.0)) throw std::invalid_argument("simulation eta grid: R has no positive entry");
  std::vector<double> grid;
  for (int k = 1; k <= 100; ++k) grid.push_back(k / 100.0 / r);
  return grid;
}

std::vector<double> analysis_eta_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 100; ++k) grid.push_back(k / 100.0);
  return grid;
}

}  // namespace sncm
