#include "sncm/model_eval.hpp"

#include <cmath>
#include <stdexcept>

#include "sncm/distributions.hpp"

namespace sncm {

namespace {

void require_draws(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() < 2) throw std::invalid_argument("ELPD: need at least two posterior draws");
  if (loglik.cols() < 1) throw std::invalid_argument("ELPD: no observations");
}

// log mean_s exp(x_s)
double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double m = x.maxCoeff();
  if (m == -kInf) return -kInf;
  return m + std::log((x.array() - m).exp().mean());
}

}  // namespace

WaicPart elpd_waic(const Eigen::MatrixXd& loglik) {
  require_draws(loglik);
  const auto n = loglik.cols();
  const double s = static_cast<double>(loglik.rows());
  WaicPart out;
  out.pointwise.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = loglik.col(i);
    const double lppd = log_mean_exp(col);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (s - 1.0);
    out.pointwise[i] = lppd - var;
    out.p_waic += var;
  }
  out.elpd = out.pointwise.sum();
  return out;
}

IsPart elpd_is(const Eigen::MatrixXd& loglik) {
  require_draws(loglik);
  const auto n = loglik.cols();
  IsPart out;
  out.pointwise.resize(n);
  out.max_weight.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd neg = -loglik.col(i);
    const double lme = log_mean_exp(neg);
    out.pointwise[i] = -lme;
    // normalized weights w_s proportional to exp(-ll_s)
    const double m = neg.maxCoeff();
    const double total = (neg.array() - m).exp().sum();
    out.max_weight[i] = 1.0 / total;
    if (out.max_weight[i] > 0.5) ++out.unstable_points;
  }
  out.elpd = out.pointwise.sum();
  return out;
}

ElpdReport elpd_report(const Eigen::MatrixXd& loglik) {
  const WaicPart w = elpd_waic(loglik);
  const IsPart is = elpd_is(loglik);
  return {is.elpd, w.elpd, w.p_waic, is.pointwise, w.pointwise, is.unstable_points};
}

Eigen::MatrixXd pooled_loglik(std::span<const PosteriorChain> chains) {
  Eigen::Index rows = 0;
  Eigen::Index cols = -1;
  for (const auto& c : chains) {
    if (c.loglik.size() == 0) throw std::invalid_argument("pooled_loglik: chain stored no log-likelihoods");
    if (cols >= 0 && c.loglik.cols() != cols) throw std::invalid_argument("pooled_loglik: column mismatch");
    cols = c.loglik.cols();
    rows += c.loglik.rows();
  }
  if (cols < 0) throw std::invalid_argument("pooled_loglik: no chains");
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& c : chains) {
    out.middleRows(r, c.loglik.rows()) = c.loglik;
    r += c.loglik.rows();
  }
  return out;
}

ElpdReport aggregate_elpd(std::span<const ElpdReport> per_model) {
  if (per_model.empty()) throw std::invalid_argument("aggregate_elpd: no models");
  ElpdReport out = per_model.front();
  for (std::size_t m = 1; m < per_model.size(); ++m) {
    const auto& r = per_model[m];
    if (r.pointwise_is.size() != out.pointwise_is.size())
      throw std::invalid_argument("aggregate_elpd: models cover different observations");
    out.elpd_is += r.elpd_is;
    out.elpd_waic += r.elpd_waic;
    out.p_waic += r.p_waic;
    out.pointwise_is += r.pointwise_is;
    out.pointwise_waic += r.pointwise_waic;
    out.unstable_is_points += r.unstable_is_points;
  }
  return out;
}

std::vector<PredictiveDraw> posterior_predictive_sample(std::span<const PosteriorChain> chains,
                                                        const CensoredDataset& data,
                                                        std::size_t draws_out, Rng& rng) {
  std::vector<const ModelState*> pool;
  for (const auto& c : chains)
    for (const auto& d : c.draws) pool.push_back(&d);
  if (pool.empty()) throw std::invalid_argument("posterior predictive: no posterior draws");
  std::vector<PredictiveDraw> out;
  out.reserve(draws_out);
  for (std::size_t k = 0; k < draws_out; ++k) {
    const ModelState& st = *pool[rng.index(pool.size())];
    const double sigma = std::sqrt(st.sigma_sq);
    PredictiveDraw y(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double v = linear_predictor(st, data, i) + st.delta * half_normal_sample(rng) + sigma * rng.normal();
      const bool present = bernoulli_sample(st.rho, rng) == 1;
      if (present && v >= data.psi) y[i] = v;
    }
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace sncm
