#include "sncm/posterior.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "sncm/distributions.hpp"

namespace sncm {

namespace {

std::size_t pooled_draw_count(std::span<const PosteriorChain> chains) {
  std::size_t total = 0;
  for (const auto& c : chains) total += c.draws.size();
  if (total == 0) throw std::invalid_argument("posterior: no draws in the supplied chains");
  return total;
}

}  // namespace

std::vector<double> compute_pips(std::span<const PosteriorChain> chains) {
  const std::size_t total = pooled_draw_count(chains);
  const std::size_t p = chains.front().draws.front().gamma.size();
  std::vector<double> counts(p, 0.0);
  for (const auto& c : chains)
    for (const auto& d : c.draws)
      for (std::size_t j = 0; j < p; ++j) counts[j] += d.gamma[j];
  for (auto& v : counts) v /= static_cast<double>(total);
  return counts;
}

std::optional<double> bayesian_fdr_threshold(std::span<const double> pips, double target) {
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("bayesian FDR: target must lie in (0,1)");
  for (double v : pips)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("bayesian FDR: PIP outside [0,1]");
  std::vector<double> sorted(pips.begin(), pips.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::optional<double> best;
  double complement_sum = 0.0;
  std::size_t k = 0;
  while (k < sorted.size()) {
    // Admit the whole tier of tied values at once.
    const double tier = sorted[k];
    while (k < sorted.size() && sorted[k] == tier) complement_sum += 1.0 - sorted[k++];
    if (complement_sum / static_cast<double>(k) <= target) best = tier;
    else break;
  }
  return best;
}

std::vector<std::size_t> select_at(std::span<const double> pips, std::optional<double> threshold) {
  std::vector<std::size_t> out;
  if (!threshold) return out;
  for (std::size_t j = 0; j < pips.size(); ++j)
    if (pips[j] >= *threshold) out.push_back(j);
  return out;
}

std::optional<double> pooled_fdr_threshold(std::span<const std::vector<double>> pips_per_model,
                                           double target) {
  std::vector<double> pooled;
  for (const auto& v : pips_per_model) pooled.insert(pooled.end(), v.begin(), v.end());
  return bayesian_fdr_threshold(pooled, target);
}

std::vector<std::optional<double>> conditional_beta_estimates(std::span<const PosteriorChain> chains) {
  pooled_draw_count(chains);
  const std::size_t p = chains.front().draws.front().gamma.size();
  std::vector<double> sums(p, 0.0);
  std::vector<std::size_t> counts(p, 0);
  for (const auto& c : chains)
    for (const auto& d : c.draws)
      for (std::size_t j = 0; j < p; ++j)
        if (d.gamma[j]) {
          sums[j] += d.beta_star[static_cast<Eigen::Index>(j)];
          ++counts[j];
        }
  std::vector<std::optional<double>> out(p);
  for (std::size_t j = 0; j < p; ++j)
    if (counts[j] > 0) out[j] = sums[j] / static_cast<double>(counts[j]);
  return out;
}

SelectionResult summarize(std::span<const PosteriorChain> chains, double fdr_target) {
  const std::size_t total = pooled_draw_count(chains);
  SelectionResult r;
  r.pip = compute_pips(chains);
  r.threshold = bayesian_fdr_threshold(r.pip, fdr_target);
  r.selected = select_at(r.pip, r.threshold);
  const auto conditional = conditional_beta_estimates(chains);
  r.beta_hat.assign(r.pip.size(), std::nullopt);
  for (std::size_t j : r.selected) r.beta_hat[j] = conditional[j];

  const auto s = chains.front().draws.front().alpha.size();
  r.alpha_hat = Eigen::VectorXd::Zero(s);
  for (const auto& c : chains)
    for (const auto& d : c.draws) {
      r.beta0_hat += d.beta0;
      r.sigma_sq_hat += d.sigma_sq;
      r.delta_hat += d.delta;
      r.rho_hat += d.rho;
      if (s) r.alpha_hat += d.alpha;
    }
  const double inv = 1.0 / static_cast<double>(total);
  r.beta0_hat *= inv;
  r.sigma_sq_hat *= inv;
  r.delta_hat *= inv;
  r.rho_hat *= inv;
  r.alpha_hat *= inv;
  return r;
}

std::vector<std::pair<std::string, std::vector<std::vector<double>>>> scalar_traces(
    std::span<const PosteriorChain> chains) {
  pooled_draw_count(chains);
  const auto& first = chains.front().draws.front();
  const std::size_t p = first.gamma.size();
  const auto s = static_cast<std::size_t>(first.alpha.size());
  std::vector<std::pair<std::string, std::vector<std::vector<double>>>> traces;
  auto add = [&](std::string name, auto&& extract) {
    std::vector<std::vector<double>> per_chain;
    for (const auto& c : chains) {
      std::vector<double> v;
      v.reserve(c.draws.size());
      for (const auto& d : c.draws) v.push_back(extract(d));
      per_chain.push_back(std::move(v));
    }
    traces.emplace_back(std::move(name), std::move(per_chain));
  };
  add("beta0", [](const ModelState& d) { return d.beta0; });
  add("sigma_sq", [](const ModelState& d) { return d.sigma_sq; });
  add("delta", [](const ModelState& d) { return d.delta; });
  add("rho", [](const ModelState& d) { return d.rho; });
  add("model_size", [](const ModelState& d) { return static_cast<double>(d.model_size()); });
  for (std::size_t t = 0; t < s; ++t)
    add("alpha[" + std::to_string(t) + "]", [t](const ModelState& d) { return d.alpha[static_cast<Eigen::Index>(t)]; });
  for (std::size_t j = 0; j < p; ++j)
    add("beta[" + std::to_string(j) + "]", [j](const ModelState& d) {
      return d.gamma[j] ? d.beta_star[static_cast<Eigen::Index>(j)] : 0.0;
    });
  return traces;
}

namespace {

std::vector<std::vector<double>> equalize(const std::vector<std::vector<double>>& chains) {
  std::size_t len = chains.front().size();
  for (const auto& c : chains) len = std::min(len, c.size());
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(len));
  return out;
}

std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  const std::size_t len = chains.front().size();
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t t = 0; t < len; ++t) pooled.emplace_back(chains[c][t], c * len + t);
  std::sort(pooled.begin(), pooled.end());
  const double total = static_cast<double>(pooled.size());
  std::vector<double> z(pooled.size());
  for (std::size_t a = 0; a < pooled.size();) {
    std::size_t b = a;
    while (b < pooled.size() && pooled[b].first == pooled[a].first) ++b;
    const double avg_rank = 0.5 * static_cast<double>(a + 1 + b);  // 1-based average over ties
    const double q = normal_quantile((avg_rank - 0.375) / (total + 0.25));
    for (std::size_t k = a; k < b; ++k) z[pooled[k].second] = q;
    a = b;
  }
  std::vector<std::vector<double>> out(chains.size(), std::vector<double>(len));
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t t = 0; t < len; ++t) out[c][t] = z[c * len + t];
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double plain_rhat(const std::vector<std::vector<double>>& chains) {
  const double n = static_cast<double>(chains.front().size());
  const double m = static_cast<double>(chains.size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    const double mu = mean_of(c);
    means.push_back(mu);
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    w += ss / (n - 1.0);
  }
  w /= m;
  const double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : kInf;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::max(1.0, std::sqrt(var_plus / w));
}

std::vector<double> autocovariance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const double mu = mean_of(x);
  std::size_t nfft = 1;
  while (nfft < 2 * n) nfft <<= 1;
  std::vector<double> padded(nfft, 0.0);
  for (std::size_t t = 0; t < n; ++t) padded[t] = x[t] - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  std::vector<double> acov(n);
  for (std::size_t t = 0; t < n; ++t) acov[t] = back[t] / static_cast<double>(n);
  return acov;
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("split_rhat: need at least two chains");
  const auto eq = equalize(chains);
  const std::size_t len = eq.front().size();
  if (len < 4) throw std::invalid_argument("split_rhat: chains too short");
  const auto ranked = rank_normalize(eq);
  const std::size_t half = len / 2;
  std::vector<std::vector<double>> halves;
  for (const auto& c : ranked) {
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return plain_rhat(halves);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("ess: no chains");
  const auto eq = equalize(chains);
  const std::size_t n = eq.front().size();
  const double m = static_cast<double>(eq.size());
  if (n < 4) throw std::invalid_argument("ess: chains too short");
  const double nn = static_cast<double>(n);

  std::vector<std::vector<double>> acov;
  std::vector<double> means;
  for (const auto& c : eq) {
    acov.push_back(autocovariance(c));
    means.push_back(mean_of(c));
  }
  double w = 0.0;
  for (const auto& a : acov) w += a[0] * nn / (nn - 1.0);
  w /= m;
  double b = 0.0;
  if (eq.size() > 1) {
    const double grand = mean_of(means);
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= nn / (m - 1.0);
  }
  const double var_plus = w * (nn - 1.0) / nn + b / nn;
  if (var_plus <= 0.0) return m * nn;

  auto rho = [&](std::size_t t) {
    double mean_acov = 0.0;
    for (const auto& a : acov) mean_acov += a[t];
    mean_acov /= m;
    return 1.0 - (w - mean_acov) / var_plus;
  };
  // Geyer initial positive + monotone sequence over lag pairs.
  double tau = -1.0;
  double prev_pair = kInf;
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(m * nn));
  return m * nn / tau;
}

std::vector<ParameterDiagnostics> convergence_report(std::span<const PosteriorChain> chains) {
  if (chains.size() < 2) throw std::invalid_argument("convergence_report: need at least two chains");
  std::vector<ParameterDiagnostics> out;
  for (auto& [name, per_chain] : scalar_traces(chains)) {
    ParameterDiagnostics d;
    d.name = name;
    for (const auto& c : per_chain) d.chain_means.push_back(mean_of(c));
    d.rhat = split_rhat(per_chain);
    d.ess = effective_sample_size(per_chain);
    d.flagged = d.rhat > 1.1;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<double> half_min_imputed(const CensoredDataset& data) {
  const double fill = 0.5 * data.min_observed();
  std::vector<double> out;
  out.reserve(data.n());
  for (const auto& y : data.y) out.push_back(y ? *y : fill);
  return out;
}

std::pair<CensoredDataset, ResponseTransform> standardize_with_pmv(const CensoredDataset& data) {
  const auto imputed = half_min_imputed(data);
  const double n = static_cast<double>(imputed.size());
  if (imputed.size() < 2) throw std::invalid_argument("standardize: need at least two rows");
  const double center = mean_of(imputed);
  double ss = 0.0;
  for (double v : imputed) ss += (v - center) * (v - center);
  const double scale = std::sqrt(ss / (n - 1.0));
  if (!(scale > 0.0)) throw std::invalid_argument("standardize: response has zero variance after imputation");
  ResponseTransform tr{center, scale};
  CensoredDataset out = data;
  for (auto& y : out.y)
    if (y) *y = tr.forward(*y);
  out.psi = tr.forward(data.psi);
  return {std::move(out), tr};
}

double empirical_slab_variance(const CensoredDataset& data) {
  const std::size_t p = data.p();
  if (p < 2) throw std::invalid_argument("empirical slab variance: need at least two predictors");
  const auto imputed = half_min_imputed(data);
  const auto n = static_cast<Eigen::Index>(imputed.size());
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(imputed.data(), n);
  const double center = y.mean();
  const double scale = std::sqrt((y.array() - center).square().sum() / static_cast<double>(n - 1));
  if (!(scale > 0.0)) throw std::invalid_argument("empirical slab variance: response has zero variance");
  y = (y.array() - center) / scale;

  const auto s = static_cast<Eigen::Index>(data.s());
  Eigen::MatrixXd design(n, 2 + s);
  design.col(0).setOnes();
  if (s) design.rightCols(s) = data.C;
  std::vector<double> slopes;
  slopes.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    design.col(1) = data.X.col(static_cast<Eigen::Index>(j));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols())
      throw std::invalid_argument("empirical slab variance: degenerate design for predictor " + std::to_string(j));
    slopes.push_back(qr.solve(y)[1]);
  }
  const double mu = mean_of(slopes);
  double ss = 0.0;
  for (double b : slopes) ss += (b - mu) * (b - mu);
  const double var = ss / static_cast<double>(p - 1);
  if (!(var > 1e-14)) throw std::invalid_argument("empirical slab variance: slopes have zero variance (degenerate predictors)");
  return var;
}

BetaPrior adaptive_beta_prior(double observed_fraction) {
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0))
    throw std::invalid_argument("adaptive beta prior: observed fraction must lie in (0,1]");
  const double root = std::sqrt(observed_fraction);
  return {5.0 * root, std::max(5.0 * (1.0 - root), kRho1Floor)};
}

}  // namespace sncm
