#include "sncm/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sncm/distributions.hpp"

namespace sncm {

namespace {

constexpr double kHalfNormalVarFactor = 1.0 - 2.0 / kPi;  // Var(|N(0,1)|)
constexpr std::array<double, 5> kSignalPattern = {0.4, -0.6, 0.8, -1.0, 1.2};

struct ErrorSplit {
  double sigma;
  double delta;
};

// Total error variance `total`, a share `skew_share` of it carried by delta * Z.
ErrorSplit split_error_variance(double total, double skew_share) {
  return {std::sqrt((1.0 - skew_share) * total), std::sqrt(skew_share * total / kHalfNormalVarFactor)};
}

std::uint64_t scenario_index(ScenarioName s) {
  return static_cast<std::uint64_t>(s);
}

}  // namespace

const char* to_string(ScenarioName s) {
  switch (s) {
    case ScenarioName::baseline: return "baseline";
    case ScenarioName::high_variance: return "high_variance";
    case ScenarioName::high_censoring: return "high_censoring";
    case ScenarioName::high_skewness: return "high_skewness";
    case ScenarioName::misspecified_R: return "misspecified_R";
    case ScenarioName::lognormal_errors: return "lognormal_errors";
    case ScenarioName::correlated_predictors: return "correlated_predictors";
    case ScenarioName::large_n: return "large_n";
  }
  return "unknown";
}

ScenarioName scenario_from_string(const std::string& s) {
  for (auto name : kAllScenarios)
    if (s == to_string(name)) return name;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

const char* to_string(PriorKind k) { return k == PriorKind::mrf ? "mrf" : "independent"; }

const char* to_string(BaselineMethod m) {
  return m == BaselineMethod::forced_rho_1 ? "forced_rho_1" : "half_min_impute";
}

double SimScenario::error_mean() const {
  if (error_family == ErrorFamily::log_normal)
    return std::exp(lognormal_meanlog + 0.5 * lognormal_sdlog * lognormal_sdlog);
  return delta * kSqrt2OverPi;
}

double SimScenario::error_variance() const {
  if (error_family == ErrorFamily::log_normal) {
    const double s2 = lognormal_sdlog * lognormal_sdlog;
    return std::expm1(s2) * std::exp(2.0 * lognormal_meanlog + s2);
  }
  return sigma * sigma + delta * delta * kHalfNormalVarFactor;
}

std::vector<std::size_t> SimScenario::true_predictors() const {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) out.push_back(static_cast<std::size_t>(j));
  return out;
}

SimScenario make_scenario(ScenarioName name, std::size_t calibration_draws) {
  if (calibration_draws < 1000) throw std::invalid_argument("make_scenario: too few calibration draws");
  SimScenario sc;
  sc.name = name;
  sc.R = simulation_R(15, 20);
  sc.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sc.p));
  // Signals: local predictors 1-5 of category 1, 6-10 of category 2, 11-15 of 3, 16-20 of 4.
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t k = 0; k < 5; ++k)
      sc.beta[static_cast<Eigen::Index>(20 * b + 5 * b + k)] = kSignalPattern[k];

  ErrorSplit err = split_error_variance(8.0, 0.75);
  switch (name) {
    case ScenarioName::baseline: break;
    case ScenarioName::high_variance:
      err.sigma *= 1.5;
      err.delta *= 1.5;
      break;
    case ScenarioName::high_censoring:
      sc.rho = 0.7;
      sc.censor_prob = 0.30;
      break;
    case ScenarioName::high_skewness: err = split_error_variance(8.0, 0.95); break;
    case ScenarioName::misspecified_R: sc.permute_R = true; break;
    case ScenarioName::lognormal_errors: {
      // Match mean delta*sqrt(2/pi) and variance 8 of the baseline error.
      const double mean = err.delta * kSqrt2OverPi;
      const double var = 8.0;
      const double s2 = std::log1p(var / (mean * mean));
      sc.error_family = ErrorFamily::log_normal;
      sc.lognormal_sdlog = std::sqrt(s2);
      sc.lognormal_meanlog = std::log(mean) - 0.5 * s2;
      break;
    }
    case ScenarioName::correlated_predictors: {
      sc.correlated = true;
      Eigen::MatrixXd cov = sc.R.entries();
      cov.diagonal().setOnes();
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("correlated_predictors: R with unit diagonal is not positive definite");
      sc.x_chol = llt.matrixL();
      break;
    }
    case ScenarioName::large_n: sc.n = 1000; break;
  }
  sc.sigma = err.sigma;
  sc.delta = err.delta;

  // psi: censor_prob quantile of V = beta0 + x'beta + error. The linear part is exactly
  // N(0, beta' Sigma beta) for Gaussian predictors.
  double lin_var = sc.beta.squaredNorm();
  if (sc.correlated) {
    Eigen::MatrixXd cov = sc.R.entries();
    cov.diagonal().setOnes();
    lin_var = sc.beta.dot(cov * sc.beta);
  }
  const double lin_sd = std::sqrt(lin_var);
  sc.calibration_seed = derive_seed(0x5ca1ab1eULL, scenario_index(name));
  Rng rng(sc.calibration_seed);
  std::vector<double> v(calibration_draws);
  for (auto& x : v) x = sc.beta0 + lin_sd * rng.normal() + draw_error(sc, rng);
  const auto k = static_cast<std::size_t>(std::llround(sc.censor_prob * static_cast<double>(v.size())));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  const double upper = v[k];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
  sc.psi = 0.5 * (lower + upper);
  return sc;
}

double draw_error(const SimScenario& sc, Rng& rng) {
  if (sc.error_family == ErrorFamily::log_normal)
    return std::exp(sc.lognormal_meanlog + sc.lognormal_sdlog * rng.normal());
  return sc.sigma * rng.normal() + sc.delta * half_normal_sample(rng);
}

Eigen::VectorXd draw_predictors(const SimScenario& sc, Rng& rng) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(sc.p));
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
  if (sc.correlated) return sc.x_chol.triangularView<Eigen::Lower>() * z;
  return z;
}

SimReplicate generate_replicate(const SimScenario& sc, Rng& rng, std::size_t index) {
  SimReplicate rep;
  rep.index = index;
  const auto n = static_cast<Eigen::Index>(sc.n);
  const auto p = static_cast<Eigen::Index>(sc.p);
  CensoredDataset& d = rep.data;
  d.X.resize(n, p);
  d.C.resize(n, 0);
  d.y.assign(sc.n, std::nullopt);
  for (Eigen::Index i = 0; i < n; ++i) d.X.row(i) = draw_predictors(sc, rng).transpose();
  const Eigen::VectorXd lin = d.X * sc.beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = sc.beta0 + lin[i] + draw_error(sc, rng);
    const bool present = rng.uniform() < sc.rho;
    if (present && v >= sc.psi) d.y[static_cast<std::size_t>(i)] = v;
  }
  for (std::size_t j = 0; j < sc.p; ++j) d.predictor_names.push_back("x" + std::to_string(j + 1));
  d.psi = d.observed_count() ? d.min_observed() : sc.psi;
  rep.true_psi = sc.psi;
  rep.true_beta = sc.beta;
  rep.true_gamma.assign(sc.p, 0);
  for (std::size_t j : sc.true_predictors()) rep.true_gamma[j] = 1;

  if (sc.permute_R) {
    std::vector<std::size_t> perm(sc.p);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[rng.index(k)]);
    rep.R_fit = sc.R.permuted(perm);
  } else {
    rep.R_fit = sc.R;
  }
  return rep;
}

Hyperparams simulation_hyperparams(const CensoredDataset& data, PriorKind prior, const FitSettings& settings,
                                   const RelationshipMatrix& R_fit) {
  Hyperparams h = Hyperparams::simulation_defaults(data.p());
  h.lambda_sq.assign(data.s(), h.nu0_sq);
  const BetaPrior bp = adaptive_beta_prior(data.observed_fraction());
  h.rho0 = bp.rho0;
  h.rho1 = bp.rho1;
  if (prior == PriorKind::mrf) {
    h.selection = MrfPrior(settings.omega, settings.eta, R_fit);
  } else {
    h.selection = MrfPrior::independent(settings.omega, data.p());
  }
  return h;
}

FitOutcome fit_dataset(const CensoredDataset& data, PriorKind prior, const FitSettings& settings,
                       const RelationshipMatrix& R_fit, const SamplerOptions& base_options, Rng rng) {
  const Hyperparams hyper = simulation_hyperparams(data, prior, settings, R_fit);
  SamplerOptions opts = base_options;
  opts.error_model = settings.error_model;
  opts.store_loglik = settings.store_loglik;
  opts.store_latents = false;
  std::vector<PosteriorChain> chains;
  for (std::size_t c = 0; c < settings.mcmc.chains; ++c)
    chains.push_back(run_chain(data, hyper, settings.mcmc, opts, c == 0 ? rng : rng.split(c), c));
  FitOutcome out;
  out.selection = summarize(chains, settings.fdr_target);
  out.conditional_beta = conditional_beta_estimates(chains);
  if (settings.store_loglik) out.elpd = elpd_report(pooled_loglik(chains));
  return out;
}

CensoredDataset half_min_dataset(const CensoredDataset& data) {
  CensoredDataset out = data;
  const auto filled = half_min_imputed(data);
  for (std::size_t i = 0; i < filled.size(); ++i) out.y[i] = filled[i];
  out.psi = *std::min_element(filled.begin(), filled.end());
  return out;
}

FitOutcome run_baseline_methods(const CensoredDataset& data, BaselineMethod which, const FitSettings& settings,
                                Rng rng) {
  const RelationshipMatrix none = RelationshipMatrix::zeros(data.p());
  if (which == BaselineMethod::forced_rho_1) {
    SamplerOptions opts;
    opts.fix_rho_one = true;
    return fit_dataset(data, PriorKind::independent, settings, none, opts, rng);
  }
  return fit_dataset(half_min_dataset(data), PriorKind::independent, settings, none, {}, rng);
}

ReplicateScore score_replicate(const std::vector<std::size_t>& selected, const BitVector& truth) {
  ReplicateScore s;
  std::size_t hits = 0;
  for (std::size_t j : selected) hits += truth.at(j);
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
  s.selected = selected.size();
  s.tpr = positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0;
  s.fdr = selected.empty() ? 0.0 : static_cast<double>(selected.size() - hits) / static_cast<double>(selected.size());
  return s;
}

MetricsReport score(const std::vector<ReplicateResult>& results, const BitVector& truth,
                    const Eigen::VectorXd& true_beta) {
  if (results.empty()) throw std::invalid_argument("score: no replicates");
  MetricsReport m;
  m.replicates = results.size();
  for (std::size_t j = 0; j < truth.size(); ++j)
    if (truth[j]) m.true_predictors.push_back(j);
  const std::size_t k = m.true_predictors.size();
  m.variable_tpr.assign(k, 0.0);
  m.bias.assign(k, 0.0);
  m.rmse.assign(k, 0.0);
  m.estimate_count.assign(k, 0);

  std::vector<double> tprs;
  std::vector<double> fdrs;
  for (const auto& r : results) {
    const ReplicateScore s = score_replicate(r.selected, truth);
    tprs.push_back(s.tpr);
    fdrs.push_back(s.fdr);
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t j = m.true_predictors[a];
      if (std::find(r.selected.begin(), r.selected.end(), j) != r.selected.end()) m.variable_tpr[a] += 1.0;
      if (j < r.conditional_beta.size() && r.conditional_beta[j]) {
        const double err = *r.conditional_beta[j] - true_beta[static_cast<Eigen::Index>(j)];
        m.bias[a] += err;
        m.rmse[a] += err * err;
        ++m.estimate_count[a];
      }
    }
  }
  const double reps = static_cast<double>(results.size());
  auto mean_sd = [reps](const std::vector<double>& v, double& mean, double& sd) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / reps;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / (reps - 1.0)) : 0.0;
  };
  mean_sd(tprs, m.overall_tpr, m.tpr_sd);
  mean_sd(fdrs, m.fdr, m.fdr_sd);
  for (std::size_t a = 0; a < k; ++a) {
    m.variable_tpr[a] /= reps;
    if (m.estimate_count[a]) {
      const double c = static_cast<double>(m.estimate_count[a]);
      m.bias[a] /= c;
      m.rmse[a] = std::sqrt(m.rmse[a] / c);
    } else {
      m.bias[a] = std::nan("");
      m.rmse[a] = std::nan("");
    }
  }
  return m;
}

EtaSelection tune_scenario_eta(const SimScenario& sc, double omega, const Rng& rng, std::size_t threads) {
  EtaSearchSpec spec;
  spec.omega0 = omega;
  spec.candidates = simulation_eta_grid(sc.R);
  return select_eta(spec, sc.R, rng, threads);
}

}  // namespace sncm
