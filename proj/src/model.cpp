#include "sncm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "sncm/distributions.hpp"

namespace sncm {

std::size_t CensoredDataset::observed_count() const {
  std::size_t k = 0;
  for (const auto& v : y)
    if (v) ++k;
  return k;
}

double CensoredDataset::observed_fraction() const {
  return n() == 0 ? 0.0 : static_cast<double>(observed_count()) / static_cast<double>(n());
}

double CensoredDataset::min_observed() const {
  double m = kInf;
  for (const auto& v : y)
    if (v) m = std::min(m, *v);
  if (m == kInf) throw std::invalid_argument("dataset: no observed response values");
  return m;
}

void CensoredDataset::validate() const {
  if (y.empty()) throw std::invalid_argument("dataset: no rows");
  const auto rows = static_cast<Eigen::Index>(y.size());
  if (X.rows() != rows) throw std::invalid_argument("dataset: predictor row count differs from response length");
  if (C.rows() != rows && C.size() != 0)
    throw std::invalid_argument("dataset: confounder row count differs from response length");
  if (!std::isfinite(psi)) throw std::invalid_argument("dataset: detection limit must be finite");
  if (!X.allFinite()) throw std::invalid_argument("dataset: non-finite predictor value");
  if (C.size() != 0 && !C.allFinite()) throw std::invalid_argument("dataset: non-finite confounder value");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i]) continue;
    if (!std::isfinite(*y[i]))
      throw std::invalid_argument("dataset: non-finite response at row " + std::to_string(i));
    if (*y[i] < psi)
      throw std::invalid_argument("dataset: observed response below detection limit at row " +
                                  std::to_string(i));
  }
  if (!predictor_names.empty() && predictor_names.size() != p())
    throw std::invalid_argument("dataset: predictor name count mismatch");
  if (!confounder_names.empty() && confounder_names.size() != s())
    throw std::invalid_argument("dataset: confounder name count mismatch");
}

void Hyperparams::validate(std::size_t p, std::size_t s) const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("hyperparameters: ") + what + " must be positive");
  };
  positive(nu0_sq, "nu0_sq");
  positive(nu_sq, "nu_sq");
  positive(nud_sq, "nud_sq");
  positive(xi0, "xi0");
  positive(sigma0_sq, "sigma0_sq");
  positive(rho0, "rho0");
  positive(rho1, "rho1");
  if (lambda_sq.size() != s) throw std::invalid_argument("hyperparameters: lambda_sq length must equal s");
  for (double v : lambda_sq) positive(v, "lambda_sq");
  if (selection.size() != p) throw std::invalid_argument("hyperparameters: selection prior dimension must equal p");
}

Hyperparams Hyperparams::simulation_defaults(std::size_t p) {
  Hyperparams h(MrfPrior::independent(logit(0.02), p));
  h.nu0_sq = 25.0;
  h.nud_sq = 25.0;
  h.nu_sq = 4.0;
  h.xi0 = 5.0;
  h.sigma0_sq = 4.0;
  return h;
}

Hyperparams Hyperparams::analysis_defaults(std::size_t p, std::size_t s) {
  Hyperparams h(MrfPrior::independent(logit(0.05), p));
  h.nu0_sq = 100.0;
  h.nud_sq = 100.0;
  h.lambda_sq.assign(s, 100.0);
  h.nu_sq = 4.0;
  h.xi0 = 3.0;
  h.sigma0_sq = 1.0;
  return h;
}

Eigen::VectorXd ModelState::effective_beta() const {
  Eigen::VectorXd b = beta_star;
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (!gamma[static_cast<std::size_t>(j)]) b[j] = 0.0;
  return b;
}

std::size_t ModelState::model_size() const {
  std::size_t k = 0;
  for (auto g : gamma) k += g;
  return k;
}

std::string ModelState::check_invariants(const CensoredDataset& data) const {
  const std::size_t n = data.n();
  if (static_cast<std::size_t>(V.size()) != n || U.size() != n || static_cast<std::size_t>(Z.size()) != n)
    return "latent vector length mismatch";
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (!(Z[ii] > 0.0)) return "Z not positive at row " + std::to_string(i);
    if (data.observed(i)) {
      if (V[ii] != *data.y[i] || U[i] != 1) return "observed row " + std::to_string(i) + " has V != y or U != 1";
    } else if (U[i] == 1 && !(V[ii] < data.psi)) {
      return "censored row " + std::to_string(i) + " has V >= psi";
    }
  }
  if (!(sigma_sq > 0.0)) return "sigma_sq not positive";
  if (!(rho >= 0.0 && rho <= 1.0)) return "rho outside [0,1]";
  return {};
}

double linear_predictor(const ModelState& state, const CensoredDataset& data, std::size_t i) {
  const auto ii = static_cast<Eigen::Index>(i);
  double mu = state.beta0;
  for (std::size_t j = 0; j < data.p(); ++j)
    if (state.gamma[j]) mu += state.beta_star[static_cast<Eigen::Index>(j)] * data.X(ii, static_cast<Eigen::Index>(j));
  for (std::size_t t = 0; t < data.s(); ++t)
    mu += state.alpha[static_cast<Eigen::Index>(t)] * data.C(ii, static_cast<Eigen::Index>(t));
  return mu;
}

double obs_loglik_point(const std::optional<double>& y, double mu, double sigma_sq, double delta,
                        double rho, double psi) {
  const SkewNormalParams sn{mu, sigma_sq, delta};
  if (y) {
    if (rho <= 0.0) return -kInf;
    return std::log(rho) + sn_logpdf(*y, sn);
  }
  if (rho <= 0.0) return 0.0;
  const double log_cdf = sn_logcdf(psi, sn);
  if (rho >= 1.0) return log_cdf;
  return log_sum_exp(std::log1p(-rho), std::log(rho) + log_cdf);
}

double obs_loglik_i(const ModelState& state, const CensoredDataset& data, std::size_t i) {
  return obs_loglik_point(data.y[i], linear_predictor(state, data, i), state.sigma_sq, state.delta,
                          state.rho, data.psi);
}

double aug_loglik_i(const ModelState& state, const CensoredDataset& data, std::size_t i) {
  const auto ii = static_cast<Eigen::Index>(i);
  const double z = state.Z[ii];
  if (!(z > 0.0)) throw std::domain_error("aug_loglik_i: Z must be positive");
  double out = 0.0;
  if (state.U[i]) {
    out += state.rho > 0.0 ? std::log(state.rho) : -kInf;
  } else {
    out += state.rho < 1.0 ? std::log1p(-state.rho) : -kInf;
  }
  const double sigma = std::sqrt(state.sigma_sq);
  const double resid = state.V[ii] - linear_predictor(state, data, i) - state.delta * z;
  out += std::log(2.0) + normal_logpdf(z) + normal_logpdf(resid / sigma) - std::log(sigma);
  return out;
}

}  // namespace sncm
