#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sncm/posterior.hpp"

using namespace sncm;

namespace {

// Largest prefix of the decreasing PIPs (cut only between distinct values) with mean(1 - pip) <= target.
std::optional<double> prefix_oracle(std::vector<double> pips, double target) {
  std::sort(pips.begin(), pips.end(), std::greater<>());
  std::optional<double> best;
  for (std::size_t k = 1; k <= pips.size(); ++k) {
    if (k < pips.size() && pips[k] == pips[k - 1]) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += 1.0 - pips[i];
    if (s / static_cast<double>(k) <= target) best = pips[k - 1];
  }
  return best;
}

PosteriorChain chain_from_gammas(const std::vector<BitVector>& gammas, const std::vector<double>& betas) {
  PosteriorChain c;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    ModelState s;
    s.gamma = gammas[k];
    s.beta_star = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(gammas[k].size()), betas[k]);
    s.alpha = Eigen::VectorXd::Zero(0);
    s.beta0 = static_cast<double>(k);
    s.sigma_sq = 1.0;
    s.rho = 0.5;
    c.draws.push_back(s);
  }
  return c;
}

}  // namespace

TEST_CASE("Bayesian FDR threshold examples") {
  const std::vector<double> pips = {0.50, 0.99, 0.90, 0.98};
  const auto t = bayesian_fdr_threshold(pips, 0.05);
  REQUIRE(t.has_value());
  CHECK(*t == 0.90);
  CHECK(select_at(pips, t) == std::vector<std::size_t>{1, 2, 3});
  CHECK_FALSE(bayesian_fdr_threshold(std::vector<double>{0.9, 0.2}, 0.05).has_value());
  CHECK(select_at(std::vector<double>{0.9}, std::nullopt).empty());
  // A tied tier is admitted or rejected as a whole.
  CHECK(*bayesian_fdr_threshold(std::vector<double>{1.0, 0.93, 0.93}, 0.05) == 0.93);
  CHECK(*bayesian_fdr_threshold(std::vector<double>{1.0, 0.9, 0.9}, 0.05) == 1.0);
  CHECK(*bayesian_fdr_threshold(std::vector<double>{1.0, 0.9, 0.9}, 0.05) == *prefix_oracle({1.0, 0.9, 0.9}, 0.05));
  CHECK_THROWS(bayesian_fdr_threshold(std::vector<double>{1.2}, 0.05));
  CHECK_THROWS(bayesian_fdr_threshold(std::vector<double>{0.5}, 0.0));
}

TEST_CASE("FDR threshold agrees with brute-force prefixes") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t p = 1 + rng.index(40);
    std::vector<double> pips(p);
    for (auto& v : pips) {
      const double u = rng.uniform();
      v = u < 0.3 ? 1.0 - 0.05 * rng.uniform() : (u < 0.4 ? 1.0 : std::round(rng.uniform() * 50) / 50);
    }
    const double target = 0.01 + 0.2 * rng.uniform();
    CHECK(bayesian_fdr_threshold(pips, target) == prefix_oracle(pips, target));
  }
  const std::vector<std::vector<double>> models = {{0.99, 0.2}, {0.97, 0.95}};
  CHECK(pooled_fdr_threshold(models, 0.05) == prefix_oracle({0.99, 0.2, 0.97, 0.95}, 0.05));
}

TEST_CASE("PIPs, conditional estimates and summaries over pooled chains") {
  const PosteriorChain a = chain_from_gammas({{1, 0, 1}, {1, 0, 0}}, {2.0, 4.0});
  const PosteriorChain b = chain_from_gammas({{1, 0, 1}, {0, 0, 1}}, {6.0, 8.0});
  const std::vector<PosteriorChain> chains = {a, b};
  const auto pip = compute_pips(chains);
  CHECK(pip == std::vector<double>{0.75, 0.0, 0.75});
  const auto est = conditional_beta_estimates(chains);
  CHECK(*est[0] == doctest::Approx(4.0));
  CHECK_FALSE(est[1].has_value());
  CHECK(*est[2] == doctest::Approx(16.0 / 3.0));
  const SelectionResult r = summarize(chains, 0.3);
  CHECK(r.selected == std::vector<std::size_t>{0, 2});
  CHECK(*r.beta_hat[2] == doctest::Approx(16.0 / 3.0));
  CHECK_FALSE(r.beta_hat[1].has_value());
  CHECK(r.beta0_hat == doctest::Approx(0.5));
  CHECK(r.rho_hat == doctest::Approx(0.5));
}

TEST_CASE("split R-hat and ESS") {
  Rng rng(22);
  std::vector<double> x(1000);
  for (auto& v : x) v = rng.normal();
  CHECK(split_rhat({x, x, x}) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(split_rhat({x, x}) >= 1.0);

  std::vector<std::vector<double>> iid(4, std::vector<double>(1000));
  for (auto& c : iid)
    for (auto& v : c) v = rng.normal();
  CHECK(split_rhat(iid) < 1.01);
  const double ess = effective_sample_size(iid);
  CHECK(std::abs(ess / 4000.0 - 1.0) < 0.15);

  auto shifted = iid;
  for (auto& v : shifted[0]) v += 3.0;
  CHECK(split_rhat(shifted) > 1.1);

  // AR(1) with phi = 0.9: ESS ~ N (1 - phi) / (1 + phi).
  std::vector<std::vector<double>> ar(4, std::vector<double>(5000));
  for (auto& c : ar) {
    double s = rng.normal() / std::sqrt(1 - 0.81);
    for (auto& v : c) {
      s = 0.9 * s + rng.normal();
      v = s;
    }
  }
  const double expected = 20000.0 * 0.1 / 1.9;
  CHECK(std::abs(effective_sample_size(ar) / expected - 1.0) < 0.3);

  // A trend within each chain is caught by the split.
  std::vector<double> trend(1000);
  for (std::size_t k = 0; k < trend.size(); ++k) trend[k] = 0.01 * static_cast<double>(k) + 0.1 * rng.normal();
  CHECK(split_rhat({trend, trend}) > 1.1);
}

TEST_CASE("convergence report flags disagreeing chains") {
  std::vector<PosteriorChain> chains(2);
  Rng rng(23);
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 400; ++k) {
      ModelState s;
      s.beta0 = rng.normal() + (c ? 5.0 : 0.0);
      s.sigma_sq = 1 + 0.1 * rng.uniform();
      s.delta = rng.normal();
      s.rho = rng.uniform();
      s.gamma = {static_cast<std::uint8_t>(rng.uniform() < 0.5)};
      s.beta_star = Eigen::VectorXd::Constant(1, rng.normal());
      s.alpha = Eigen::VectorXd::Zero(0);
      chains[c].draws.push_back(s);
    }
  const auto rep = convergence_report(chains);
  REQUIRE(rep.size() == 6);
  CHECK(rep[0].name == "beta0");
  CHECK(rep[0].flagged);
  CHECK(rep[0].chain_means.size() == 2);
  CHECK_FALSE(rep[1].flagged);
  CHECK_THROWS(convergence_report(std::span<const PosteriorChain>(chains.data(), 1)));
}

TEST_CASE("standardizing with PMVs kept missing") {
  CensoredDataset d;
  d.y = {2.0, 4.0, std::nullopt};
  d.X = Eigen::MatrixXd::Zero(3, 1);
  d.C = Eigen::MatrixXd::Zero(3, 0);
  d.psi = 2.0;
  CHECK(half_min_imputed(d) == std::vector<double>{2.0, 4.0, 1.0});
  const auto [z, tr] = standardize_with_pmv(d);
  const double center = 7.0 / 3.0, scale = std::sqrt(7.0 / 3.0);
  CHECK(tr.center == doctest::Approx(center));
  CHECK(tr.scale == doctest::Approx(scale));
  CHECK(*z.y[0] == doctest::Approx((2.0 - center) / scale));
  CHECK(*z.y[1] == doctest::Approx((4.0 - center) / scale));
  CHECK_FALSE(z.y[2].has_value());
  CHECK(z.psi == doctest::Approx((2.0 - center) / scale));
  CHECK(tr.backward(tr.forward(3.7)) == doctest::Approx(3.7));
  CHECK(tr.coefficient_to_original(0.5) == doctest::Approx(0.5 * scale));
}

TEST_CASE("empirical slab variance") {
  Rng rng(24);
  CensoredDataset d;
  const int n = 50, p = 6;
  d.X = Eigen::MatrixXd::NullaryExpr(n, p, [&]() { return rng.normal(); });
  d.C = Eigen::MatrixXd::Zero(n, 0);
  for (int i = 0; i < n; ++i) d.y.push_back(i % 7 == 0 ? std::nullopt : std::optional<double>(1.0 + 0.4 * d.X(i, 1) + std::abs(rng.normal())));
  d.psi = d.min_observed();
  // Oracle: simple-regression slopes cov(x, y) / var(x) on the imputed, standardized response.
  std::vector<double> y = half_min_imputed(d);
  const double m = oracle::mean(y), sd = std::sqrt(oracle::variance(y));
  for (auto& v : y) v = (v - m) / sd;
  std::vector<double> slopes;
  for (int j = 0; j < p; ++j) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = d.X(i, j);
    const double mx = oracle::mean(x);
    double sxy = 0, sxx = 0;
    for (int i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * y[i];
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    slopes.push_back(sxy / sxx);
  }
  CHECK(empirical_slab_variance(d) == doctest::Approx(oracle::variance(slopes)).epsilon(1e-10));
  d.X.col(1) = d.X.col(0);
  d.X.col(2) = d.X.col(0);
  d.X.col(3) = d.X.col(0);
  d.X.col(4) = d.X.col(0);
  d.X.col(5) = d.X.col(0);
  CHECK_THROWS(empirical_slab_variance(d));
}

TEST_CASE("adaptive Beta prior") {
  const BetaPrior a = adaptive_beta_prior(0.64);
  CHECK(a.rho0 == doctest::Approx(4.0));
  CHECK(a.rho1 == doctest::Approx(1.0));
  const BetaPrior b = adaptive_beta_prior(0.25);
  CHECK(b.rho0 == doctest::Approx(2.5));
  CHECK(b.rho1 == doctest::Approx(2.5));
  const BetaPrior c = adaptive_beta_prior(1.0);
  CHECK(c.rho0 == doctest::Approx(5.0));
  CHECK(c.rho1 == kRho1Floor);
  CHECK_THROWS(adaptive_beta_prior(0.0));
}
