#include "sncm/gibbs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sncm/distributions.hpp"
#include "sncm/parallel.hpp"

namespace sncm {

const char* to_string(ErrorModel m) {
  return m == ErrorModel::normal ? "normal" : "skew-normal";
}

ErrorModel error_model_from_string(const std::string& s) {
  if (s == "normal") return ErrorModel::normal;
  if (s == "skew-normal" || s == "skew_normal" || s == "skewnormal") return ErrorModel::skew_normal;
  throw std::invalid_argument("unknown error model '" + s + "' (expected normal | skew-normal)");
}

void McmcConfig::validate() const {
  if (iterations == 0) throw std::invalid_argument("mcmc: iterations must be positive");
  if (thin == 0) throw std::invalid_argument("mcmc: thin must be positive");
  if (chains == 0) throw std::invalid_argument("mcmc: chains must be positive");
  if (burn_in >= iterations) throw std::invalid_argument("mcmc: burn_in must be < iterations");
}

McmcConfig McmcConfig::simulation_defaults() {
  McmcConfig c;
  c.iterations = 150000;
  c.burn_in = 25000;
  c.thin = 25;
  c.chains = 1;
  return c;
}

McmcConfig McmcConfig::analysis_defaults() {
  McmcConfig c;
  c.iterations = 330000;
  c.burn_in = 30000;
  c.thin = 20;
  c.chains = 3;
  return c;
}

GibbsSampler::GibbsSampler(const CensoredDataset& data, const Hyperparams& hyper, SamplerOptions options)
    : data_(data), hyper_(hyper), options_(options) {
  data_.validate();
  hyper_.validate(data_.p(), data_.s());
  for (std::size_t i = 0; i < data_.n(); ++i)
    if (!data_.observed(i)) pmv_rows_.push_back(i);
  x_norm_sq_ = data_.X.colwise().squaredNorm().transpose();
}

ModelState GibbsSampler::initial_state(Rng& rng) const {
  const std::size_t n = data_.n();
  const std::size_t p = data_.p();
  ModelState s;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t k = 0;
  for (const auto& y : data_.y) {
    if (!y) continue;
    sum += *y;
    sum_sq += *y * *y;
    ++k;
  }
  const double mean = k ? sum / static_cast<double>(k) : data_.psi;
  const double var = k > 1 ? std::max((sum_sq - k * mean * mean) / static_cast<double>(k - 1), 1e-2) : 1.0;
  const double sd = std::sqrt(var);

  s.beta0 = mean;
  s.beta_star = Eigen::VectorXd(p);
  for (std::size_t j = 0; j < p; ++j) s.beta_star[static_cast<Eigen::Index>(j)] = std::sqrt(hyper_.nu_sq) * rng.normal();
  s.gamma.assign(p, 0);
  s.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data_.s()));
  s.sigma_sq = var;
  s.delta = 0.0;
  s.rho = options_.fix_rho_one ? 1.0 : std::clamp(data_.observed_fraction(), 0.05, 0.95);
  s.V = Eigen::VectorXd(n);
  s.U.assign(n, 1);
  s.Z = Eigen::VectorXd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    s.Z[ii] = std::max(half_normal_sample(rng), 1e-3);
    if (data_.observed(i)) {
      s.V[ii] = *data_.y[i];
    } else {
      s.V[ii] = data_.psi - 0.5 * sd;
      s.U[i] = options_.fix_rho_one ? 1 : bernoulli_sample(0.5, rng);
    }
  }
  return s;
}

void GibbsSampler::set_state(ModelState state) {
  state_ = std::move(state);
  if (!skew()) state_.delta = 0.0;
  if (options_.fix_rho_one) {
    state_.rho = 1.0;
    std::fill(state_.U.begin(), state_.U.end(), std::uint8_t{1});
  }
  refresh_caches();
}

void GibbsSampler::refresh_caches() {
  const std::size_t n = data_.n();
  mu_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), state_.beta0);
  for (std::size_t j = 0; j < data_.p(); ++j)
    if (state_.gamma[j]) mu_.noalias() += state_.beta_star[static_cast<Eigen::Index>(j)] * data_.X.col(static_cast<Eigen::Index>(j));
  if (data_.s() > 0) mu_.noalias() += data_.C * state_.alpha;
  resid_ = state_.V - mu_ - state_.delta * state_.Z;
}

void GibbsSampler::update_Z(Rng& rng) {
  // Z_i | rest ~ N(delta (V_i - mu_i) / (sigma^2 + delta^2), sigma^2 / (sigma^2 + delta^2)) on (0, inf)
  const double d = state_.delta;
  const double denom = state_.sigma_sq + d * d;
  const double var = state_.sigma_sq / denom;
  const TruncationWindow positive{0.0, kInf};
  for (Eigen::Index i = 0; i < state_.Z.size(); ++i) {
    const double r = state_.V[i] - mu_[i];
    state_.Z[i] = truncnorm_sample(d * r / denom, var, positive, rng);
    resid_[i] = r - d * state_.Z[i];
  }
}

void GibbsSampler::update_V_U(Rng& rng) {
  const double sd = std::sqrt(state_.sigma_sq);
  const TruncationWindow below{-kInf, data_.psi};
  for (std::size_t i : pmv_rows_) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double m = mu_[ii] + state_.delta * state_.Z[ii];
    double v;
    if (state_.U[i]) {
      v = truncnorm_sample(m, state_.sigma_sq, below, rng);
    } else {
      v = m + sd * rng.normal();
    }
    state_.V[ii] = v;
    resid_[ii] = v - m;
    if (options_.fix_rho_one) {
      state_.U[i] = 1;
    } else {
      state_.U[i] = v < data_.psi ? bernoulli_sample(state_.rho, rng) : std::uint8_t{0};
    }
  }
}

GibbsSampler::CoefficientBlock GibbsSampler::assemble_block() const {
  CoefficientBlock block;
  for (std::size_t j = 0; j < data_.p(); ++j)
    if (state_.gamma[j]) block.active.push_back(j);
  const auto n = static_cast<Eigen::Index>(data_.n());
  const auto k = static_cast<Eigen::Index>(block.active.size());
  const auto s = static_cast<Eigen::Index>(data_.s());
  const Eigen::Index q = 1 + k + s + (skew() ? 1 : 0);

  block.design.resize(n, q);
  Eigen::VectorXd prior_prec(q);
  block.design.col(0).setOnes();
  prior_prec[0] = 1.0 / hyper_.nu0_sq;
  for (Eigen::Index a = 0; a < k; ++a) {
    block.design.col(1 + a) = data_.X.col(static_cast<Eigen::Index>(block.active[static_cast<std::size_t>(a)]));
    prior_prec[1 + a] = 1.0 / hyper_.nu_sq;
  }
  for (Eigen::Index t = 0; t < s; ++t) {
    block.design.col(1 + k + t) = data_.C.col(t);
    prior_prec[1 + k + t] = 1.0 / hyper_.lambda_sq[static_cast<std::size_t>(t)];
  }
  if (skew()) {
    block.design.col(q - 1) = state_.Z;
    prior_prec[q - 1] = 1.0 / hyper_.nud_sq;
  }
  const double inv_s2 = 1.0 / state_.sigma_sq;
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(q, q);
  precision.selfadjointView<Eigen::Lower>().rankUpdate(block.design.transpose(), inv_s2);
  precision.diagonal() += prior_prec;
  block.rhs = block.design.transpose() * state_.V * inv_s2;
  block.llt.compute(precision.selfadjointView<Eigen::Lower>());
  if (block.llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "coefficient block: posterior precision not positive definite (q=" << q
        << ", sigma_sq=" << state_.sigma_sq << ")";
    throw std::runtime_error(msg.str());
  }
  return block;
}

CoefficientPosterior GibbsSampler::coefficient_posterior() const {
  const CoefficientBlock block = assemble_block();
  const Eigen::Index q = block.design.cols();
  return {block.active, block.llt.solve(block.rhs), block.llt.solve(Eigen::MatrixXd::Identity(q, q))};
}

void GibbsSampler::update_coefficients(Rng& rng) {
  const CoefficientBlock block = assemble_block();
  const Eigen::Index q = block.design.cols();
  const auto k = static_cast<Eigen::Index>(block.active.size());
  const auto s = static_cast<Eigen::Index>(data_.s());

  Eigen::VectorXd draw = block.llt.solve(block.rhs);
  Eigen::VectorXd noise(q);
  for (Eigen::Index a = 0; a < q; ++a) noise[a] = rng.normal();
  // precision = L L^T, so L^-T noise ~ N(0, precision^-1)
  draw += block.llt.matrixU().solve(noise);

  state_.beta0 = draw[0];
  const double slab_sd = std::sqrt(hyper_.nu_sq);
  for (std::size_t j = 0; j < data_.p(); ++j)
    if (!state_.gamma[j]) state_.beta_star[static_cast<Eigen::Index>(j)] = slab_sd * rng.normal();
  for (Eigen::Index a = 0; a < k; ++a)
    state_.beta_star[static_cast<Eigen::Index>(block.active[static_cast<std::size_t>(a)])] = draw[1 + a];
  for (Eigen::Index t = 0; t < s; ++t) state_.alpha[t] = draw[1 + k + t];
  if (skew()) state_.delta = draw[q - 1];

  const Eigen::Index mean_cols = 1 + k + s;
  mu_.noalias() = block.design.leftCols(mean_cols) * draw.head(mean_cols);
  resid_ = state_.V - mu_ - state_.delta * state_.Z;
}

void GibbsSampler::update_gamma(Rng& rng) {
  const MrfPrior& prior = hyper_.selection;
  const double inv_2s2 = 0.5 / state_.sigma_sq;
  const bool independent = prior.is_independent();
  const double base_log_odds = prior.omega();
  for (std::size_t j = 0; j < data_.p(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double b = state_.beta_star[jj];
    const auto x = data_.X.col(jj);
    // x . (residual with predictor j excluded)
    const double d = x.dot(resid_) + (state_.gamma[j] ? b * x_norm_sq_[jj] : 0.0);
    const double lik_log_ratio = (2.0 * b * d - b * b * x_norm_sq_[jj]) * inv_2s2;
    const double prior_log_odds = independent ? base_log_odds : prior.conditional_log_odds(j, state_.gamma);
    const std::uint8_t next = rng.uniform() < inv_logit(prior_log_odds + lik_log_ratio) ? 1 : 0;
    if (next == state_.gamma[j]) continue;
    const double shift = next ? b : -b;
    mu_.noalias() += shift * x;
    resid_.noalias() -= shift * x;
    state_.gamma[j] = next;
  }
}

void GibbsSampler::update_sigma_sq(Rng& rng) {
  const double n = static_cast<double>(data_.n());
  const double shape = 0.5 * (hyper_.xi0 + n);
  const double rate = 0.5 * (hyper_.xi0 * hyper_.sigma0_sq + resid_.squaredNorm());
  state_.sigma_sq = invgamma_sample(shape, rate, rng);
}

void GibbsSampler::update_rho(Rng& rng) {
  if (options_.fix_rho_one) {
    state_.rho = 1.0;
    return;
  }
  double present = 0.0;
  for (auto u : state_.U) present += u;
  const double absent = static_cast<double>(data_.n()) - present;
  state_.rho = beta_sample(hyper_.rho0 + present, hyper_.rho1 + absent, rng);
}

void GibbsSampler::sweep(Rng& rng) { sweep(rng, rng); }

void GibbsSampler::sweep(Rng& rng, Rng& rho_rng) {
  update_Z(rng);
  update_V_U(rng);
  update_coefficients(rng);
  update_gamma(rng);
  update_sigma_sq(rng);
  update_rho(rho_rng);
}

Eigen::VectorXd GibbsSampler::observed_loglik() const {
  const std::size_t n = data_.n();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[ii] = obs_loglik_point(data_.y[i], mu_[ii], state_.sigma_sq, state_.delta, state_.rho, data_.psi);
  }
  return out;
}

namespace {

void check_finite(const ModelState& s, const Eigen::VectorXd& resid, std::size_t iteration) {
  const char* bad = nullptr;
  if (!std::isfinite(s.beta0)) bad = "beta0";
  else if (!std::isfinite(s.sigma_sq) || !(s.sigma_sq > 0.0)) bad = "sigma_sq";
  else if (!std::isfinite(s.delta)) bad = "delta";
  else if (!std::isfinite(s.rho)) bad = "rho";
  else if (!s.beta_star.allFinite()) bad = "beta_star";
  else if (s.alpha.size() && !s.alpha.allFinite()) bad = "alpha";
  else if (!s.V.allFinite()) bad = "V";
  else if (!s.Z.allFinite()) bad = "Z";
  else if (!resid.allFinite()) bad = "residual";
  if (bad) {
    std::ostringstream msg;
    msg << "non-finite state at iteration " << iteration << " in component " << bad;
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

PosteriorChain run_chain(const CensoredDataset& data, const Hyperparams& hyper, const McmcConfig& config,
                         const SamplerOptions& options, Rng rng, std::size_t chain_index) {
  config.validate();
  GibbsSampler sampler(data, hyper, options);
  PosteriorChain chain;
  chain.config = config;
  chain.options = options;
  chain.seed = rng.seed();
  chain.chain_index = chain_index;
  const std::size_t kept = config.stored_draws();
  chain.draws.reserve(kept);
  if (options.store_loglik) chain.loglik.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(data.n()));

  // rho has its own stream so fixing it leaves every other draw unchanged.
  Rng rho_rng = rng.split(1);
  sampler.set_state(sampler.initial_state(rng));
  for (std::size_t it = 0; it < config.iterations; ++it) {
    sampler.sweep(rng, rho_rng);
    check_finite(sampler.state(), sampler.residual(), it);
    if (it < config.burn_in || (it - config.burn_in + 1) % config.thin != 0) continue;
    if (chain.draws.size() >= kept) continue;
    if (options.store_loglik)
      chain.loglik.row(static_cast<Eigen::Index>(chain.draws.size())) = sampler.observed_loglik().transpose();
    ModelState snapshot = sampler.state();
    if (!options.store_latents) {
      snapshot.V.resize(0);
      snapshot.U.clear();
      snapshot.Z.resize(0);
    }
    chain.draws.push_back(std::move(snapshot));
  }
  return chain;
}

std::vector<PosteriorChain> run_chains(const CensoredDataset& data, const Hyperparams& hyper,
                                       const McmcConfig& config, const SamplerOptions& options,
                                       std::size_t threads) {
  config.validate();
  std::vector<PosteriorChain> chains(config.chains);
  const Rng master(config.seed);
  parallel_for(config.chains, threads, [&](std::size_t c) {
    chains[c] = run_chain(data, hyper, config, options, master.split(c), c);
  });
  return chains;
}

}  // namespace sncm
