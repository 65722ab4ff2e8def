#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "sncm/distributions.hpp"
#include "sncm/model.hpp"

using namespace sncm;

namespace {

CensoredDataset one_row(std::optional<double> y, double psi) {
  CensoredDataset d;
  d.y = {y};
  d.X = Eigen::MatrixXd::Zero(1, 1);
  d.C = Eigen::MatrixXd::Zero(1, 0);
  d.psi = psi;
  return d;
}

ModelState state_for(const CensoredDataset& d, double beta0, double sigma_sq, double delta, double rho) {
  ModelState s;
  s.beta0 = beta0;
  s.beta_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.p()));
  s.gamma.assign(d.p(), 0);
  s.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.s()));
  s.sigma_sq = sigma_sq;
  s.delta = delta;
  s.rho = rho;
  s.V = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.n()));
  s.U.assign(d.n(), 1);
  s.Z = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d.n()));
  return s;
}

}  // namespace

TEST_CASE("linear predictor against a dense evaluation") {
  Rng rng(1);
  CensoredDataset d;
  const int n = 7, p = 5, s = 2;
  d.X = Eigen::MatrixXd::NullaryExpr(n, p, [&]() { return rng.normal(); });
  d.C = Eigen::MatrixXd::NullaryExpr(n, s, [&]() { return rng.normal(); });
  d.y.assign(n, 1.0);
  ModelState st = state_for(d, 0.7, 1.0, 0.0, 0.5);
  for (int j = 0; j < p; ++j) st.beta_star[j] = rng.normal();
  st.gamma = {1, 0, 1, 1, 0};
  st.alpha << 0.3, -1.1;
  const Eigen::VectorXd dense = (d.X * st.effective_beta() + d.C * st.alpha).array() + st.beta0;
  for (int i = 0; i < n; ++i) CHECK(std::abs(linear_predictor(st, d, i) - dense[i]) < 1e-12);
  st.gamma.assign(p, 0);
  for (int i = 0; i < n; ++i)
    CHECK(linear_predictor(st, d, i) == doctest::Approx(0.7 + (d.C.row(i) * st.alpha)(0)));
  st.alpha.setZero();
  CHECK(linear_predictor(st, d, 3) == 0.7);
}

TEST_CASE("observed-data log-likelihood") {
  const double psi = -1.0;
  // W=1 and rho=1: the skew-normal log density.
  CHECK(obs_loglik_point(0.4, 0.1, 2.0, 1.5, 1.0, psi) == doctest::Approx(sn_logpdf(0.4, {0.1, 2.0, 1.5})));
  // W=0 and rho=0: the PMV is fully explained by absence.
  CHECK(obs_loglik_point(std::nullopt, 0.0, 1.0, 0.0, 0.0, psi) == 0.0);
  CHECK(obs_loglik_point(std::nullopt, 0.0, 1.0, 0.0, 0.8, psi) ==
        doctest::Approx(std::log(0.2 + 0.8 * oracle::Phi(-1.0))).epsilon(1e-12));
  CHECK(std::log(0.2 + 0.8 * oracle::Phi(-1.0)) == doctest::Approx(std::log(0.32695)).epsilon(1e-4));
  // W=1 and rho=0: impossible, -inf and never NaN.
  const double impossible = obs_loglik_point(0.4, 0.0, 1.0, 0.0, 0.0, psi);
  CHECK(std::isinf(impossible));
  CHECK(impossible < 0.0);
  // Monte-Carlo frequency of {U = 0 or V < psi}.
  Rng rng(3);
  std::size_t pmv = 0;
  const std::size_t N = 400000;
  for (std::size_t k = 0; k < N; ++k) {
    const bool u = rng.uniform() < 0.8;
    const double v = rng.normal();
    pmv += (!u || v < psi);
  }
  CHECK(std::abs(static_cast<double>(pmv) / N - 0.326924) < 0.003);
}

TEST_CASE("obs log-likelihood ignores beta* where gamma is 0") {
  CensoredDataset d = one_row(2.0, 0.5);
  d.X(0, 0) = 1.3;
  ModelState s = state_for(d, 1.0, 1.0, 0.5, 0.7);
  const double a = obs_loglik_i(s, d, 0);
  s.beta_star[0] = 123.0;
  CHECK(obs_loglik_i(s, d, 0) == a);
  s.gamma[0] = 1;
  CHECK(obs_loglik_i(s, d, 0) != a);
}

TEST_CASE("augmented likelihood: reductions and errors") {
  CensoredDataset d = one_row(0.8, 0.0);
  ModelState s = state_for(d, 0.2, 1.5, 0.0, 1.0);
  s.V[0] = 0.8;
  s.Z[0] = 0.6;
  const double expected = std::log(2.0 * oracle::phi(0.6)) + std::log(oracle::phi(0.6 / std::sqrt(1.5)) / std::sqrt(1.5));
  CHECK(aug_loglik_i(s, d, 0) == doctest::Approx(expected).epsilon(1e-12));
  s.rho = 0.5;
  CensoredDataset pmv = one_row(std::nullopt, 0.0);
  s.U[0] = 1;
  s.V[0] = -0.3;
  const double u1 = aug_loglik_i(s, pmv, 0);
  s.U[0] = 0;
  CHECK(aug_loglik_i(s, pmv, 0) - u1 == doctest::Approx(0.0));
  s.Z[0] = 0.0;
  CHECK_THROWS_AS(aug_loglik_i(s, pmv, 0), std::domain_error);
  s.Z[0] = -1.0;
  CHECK_THROWS_AS(aug_loglik_i(s, pmv, 0), std::domain_error);
}

TEST_CASE("marginalizing the augmented likelihood recovers the observed-data likelihood") {
  const double mu = 0.4, s2 = 0.8, delta = 1.7, rho = 0.75, psi = 0.9;
  const double sd = std::sqrt(s2);
  SUBCASE("observed row: integrate Z") {
    CensoredDataset d = one_row(1.6, psi);
    ModelState s = state_for(d, mu, s2, delta, rho);
    s.V[0] = 1.6;
    s.U[0] = 1;
    const double marg = oracle::integrate(
        [&](double z) {
          if (z <= 0.0) return 0.0;
          s.Z[0] = z;
          return std::exp(aug_loglik_i(s, d, 0));
        },
        1e-12, 12.0, 128);
    CHECK(std::log(marg) == doctest::Approx(obs_loglik_i(s, d, 0)).epsilon(1e-7));
  }
  SUBCASE("PMV row: integrate Z, V < psi and U") {
    CensoredDataset d = one_row(std::nullopt, psi);
    ModelState s = state_for(d, mu, s2, delta, rho);
    auto over_v = [&](double lo, double hi, std::uint8_t u) {
      return oracle::integrate(
          [&](double z) {
            if (z <= 0.0) return 0.0;
            s.Z[0] = z;
            s.U[0] = u;
            const double center = mu + delta * z;
            const double a = std::max(lo, center - 14.0 * sd), b = std::min(hi, center + 14.0 * sd);
            if (!(a < b)) return 0.0;
            return oracle::integrate(
                [&](double v) {
                  s.V[0] = v;
                  return std::exp(aug_loglik_i(s, d, 0));
                },
                a, b, 8, 1e-13);
          },
          1e-12, 12.0, 48, 1e-11);
    };
    const double total = over_v(-1e9, psi, 1) + over_v(-1e9, 1e9, 0);
    CHECK(std::abs(std::log(total) - obs_loglik_i(s, d, 0)) < 1e-6);
  }
}

TEST_CASE("dataset and hyperparameter validation") {
  CensoredDataset d = one_row(0.5, 1.0);
  CHECK_THROWS(d.validate());  // observed value below psi
  d.psi = 0.5;
  CHECK_NOTHROW(d.validate());
  CHECK(d.min_observed() == 0.5);
  CHECK(d.observed_fraction() == 1.0);
  CensoredDataset empty = one_row(std::nullopt, 0.0);
  CHECK_THROWS(empty.min_observed());

  Hyperparams h = Hyperparams::simulation_defaults(3);
  CHECK(h.nu0_sq == 25.0);
  CHECK(h.nu_sq == 4.0);
  CHECK(h.xi0 == 5.0);
  CHECK(h.sigma0_sq == 4.0);
  CHECK(h.selection.omega() == doctest::Approx(logit(0.02)));
  CHECK_NOTHROW(h.validate(3, 0));
  CHECK_THROWS(h.validate(4, 0));
  h.rho1 = 0.0;
  CHECK_THROWS(h.validate(3, 0));
  const Hyperparams a = Hyperparams::analysis_defaults(2, 1);
  CHECK(a.lambda_sq.size() == 1);
  CHECK(a.nu0_sq == 100.0);
  CHECK(a.selection.omega() == doctest::Approx(logit(0.05)));
}

TEST_CASE("state invariants") {
  CensoredDataset d;
  d.y = {2.0, std::nullopt, std::nullopt};
  d.X = Eigen::MatrixXd::Zero(3, 1);
  d.C = Eigen::MatrixXd::Zero(3, 0);
  d.psi = 1.0;
  ModelState s = state_for(d, 0.0, 1.0, 0.0, 0.5);
  s.V << 2.0, 0.5, 3.0;
  s.U = {1, 1, 0};
  CHECK(s.check_invariants(d).empty());
  s.V[1] = 1.5;  // U=1 PMV must sit below psi
  CHECK_FALSE(s.check_invariants(d).empty());
  s.V[1] = 0.5;
  s.V[0] = 2.5;  // observed rows keep V = y
  CHECK_FALSE(s.check_invariants(d).empty());
  s.V[0] = 2.0;
  s.Z[2] = 0.0;
  CHECK_FALSE(s.check_invariants(d).empty());
}
