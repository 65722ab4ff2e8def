#include "doctest.h"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

#include "oracles.hpp"
#include "sncm/distributions.hpp"
#include "sncm/gibbs.hpp"

using namespace sncm;

namespace {

// n=10, p=3 with two PMVs; predictors fixed by a seeded stream.
CensoredDataset micro_data() {
  Rng rng(77);
  CensoredDataset d;
  const int n = 10, p = 3;
  d.X = Eigen::MatrixXd::NullaryExpr(n, p, [&]() { return rng.normal(); });
  d.C = Eigen::MatrixXd::NullaryExpr(n, 1, [&]() { return rng.normal(); });
  d.psi = 0.2;
  for (int i = 0; i < n; ++i) {
    if (i == 3 || i == 7) d.y.push_back(std::nullopt);
    else d.y.push_back(0.3 + 0.9 * std::abs(rng.normal()));
  }
  return d;
}

Hyperparams micro_hyper() {
  Hyperparams h(MrfPrior::independent(-0.5, 3));
  h.lambda_sq = {4.0};
  h.nu_sq = 2.0;
  h.rho0 = 2.0;
  h.rho1 = 1.5;
  return h;
}

ModelState micro_state(const CensoredDataset& d) {
  ModelState s;
  s.beta0 = 0.4;
  s.beta_star = Eigen::Vector3d(0.7, -0.3, 1.1);
  s.gamma = {1, 0, 1};
  s.alpha = Eigen::VectorXd::Constant(1, 0.25);
  s.sigma_sq = 0.6;
  s.delta = 0.9;
  s.rho = 0.7;
  s.V.resize(10);
  s.Z.resize(10);
  s.U.assign(10, 1);
  for (int i = 0; i < 10; ++i) {
    s.V[i] = d.y[i] ? *d.y[i] : d.psi - 0.4;
    s.Z[i] = 0.5 + 0.1 * i;
  }
  s.U[7] = 0;
  s.V[7] = 1.3;  // absent rows may sit anywhere
  return s;
}

// Oracle linear predictor and residual, recomputed from scratch.
Eigen::VectorXd mu_of(const ModelState& s, const CensoredDataset& d) {
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(d.X.rows(), s.beta0);
  for (int j = 0; j < d.X.cols(); ++j)
    if (s.gamma[j]) mu += s.beta_star[j] * d.X.col(j);
  return mu + d.C * s.alpha;
}

double ks_crit(std::size_t n) { return 1.95 / std::sqrt(static_cast<double>(n)); }  // alpha = 0.001

constexpr std::size_t kDraws = 20000;

}  // namespace

TEST_CASE("Z full conditional matches a grid posterior") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  GibbsSampler g(d, h);
  const ModelState s0 = micro_state(d);
  const Eigen::VectorXd mu = mu_of(s0, d);
  Rng rng(5);
  for (int i : {0, 3, 7}) {
    std::vector<double> xs;
    xs.reserve(kDraws);
    for (std::size_t k = 0; k < kDraws; ++k) {
      g.set_state(s0);
      g.update_Z(rng);
      xs.push_back(g.state().Z[i]);
    }
    const double r = s0.V[i] - mu[i];
    const double sd = std::sqrt(s0.sigma_sq);
    const oracle::GridCdf cdf(
        [&](double z) { return -0.5 * z * z - 0.5 * std::pow((r - s0.delta * z) / sd, 2); }, 0.0, 10.0);
    CHECK(oracle::ks_distance(xs, cdf) < ks_crit(kDraws));
  }
}

TEST_CASE("V and U updates match their conditionals") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  GibbsSampler g(d, h);
  ModelState s0 = micro_state(d);
  const Eigen::VectorXd mu = mu_of(s0, d);
  const double sd = std::sqrt(s0.sigma_sq);
  Rng rng(6);
  // Row 3 has U = 1 (V truncated below psi), row 7 has U = 0 (V unrestricted).
  std::vector<double> v3, v7;
  std::size_t u3 = 0, u7 = 0;
  for (std::size_t k = 0; k < kDraws; ++k) {
    g.set_state(s0);
    g.update_V_U(rng);
    v3.push_back(g.state().V[3]);
    v7.push_back(g.state().V[7]);
    u3 += g.state().U[3];
    u7 += g.state().U[7];
    CHECK(g.state().V[0] == *d.y[0]);
  }
  const double m3 = mu[3] + s0.delta * s0.Z[3], m7 = mu[7] + s0.delta * s0.Z[7];
  const double F3 = oracle::Phi((d.psi - m3) / sd);
  CHECK(oracle::ks_distance(v3, [&](double v) { return std::min(1.0, oracle::Phi((v - m3) / sd) / F3); }) <
        ks_crit(kDraws));
  CHECK(oracle::ks_distance(v7, [&](double v) { return oracle::Phi((v - m7) / sd); }) < ks_crit(kDraws));
  // U | V: rho below psi, 0 above.
  const double p7 = s0.rho * oracle::Phi((d.psi - m7) / sd);
  const double se = std::sqrt(s0.rho * (1 - s0.rho) / kDraws);
  CHECK(std::abs(static_cast<double>(u3) / kDraws - s0.rho) < 4 * se);
  CHECK(std::abs(static_cast<double>(u7) / kDraws - p7) < 4 * se);

  SUBCASE("stationary joint (V, U) of a PMV row") {
    // Repeated V|U, U|V steps: P(U=1) -> rho F / (1 - rho + rho F).
    ModelState s = s0;
    g.set_state(s);
    std::size_t ones = 0;
    const std::size_t steps = 200000;
    for (std::size_t k = 0; k < steps; ++k) {
      g.update_V_U(rng);
      ones += g.state().U[3];
    }
    const double target = s0.rho * F3 / (1 - s0.rho + s0.rho * F3);
    CHECK(std::abs(static_cast<double>(ones) / steps - target) < 0.01);
  }
}

TEST_CASE("coefficient block posterior against a dense oracle") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  for (ErrorModel em : {ErrorModel::skew_normal, ErrorModel::normal}) {
    SamplerOptions opt;
    opt.error_model = em;
    GibbsSampler g(d, h, opt);
    const ModelState s0 = micro_state(d);
    g.set_state(s0);
    const bool skew = em == ErrorModel::skew_normal;
    // Design [1, x0, x2, c, (Z)], prior precisions, posterior N(P^-1 D'V/s2, P^-1).
    const int q = skew ? 5 : 4;
    Eigen::MatrixXd D(10, q);
    D.col(0).setOnes();
    D.col(1) = d.X.col(0);
    D.col(2) = d.X.col(2);
    D.col(3) = d.C.col(0);
    if (skew) D.col(4) = s0.Z;
    Eigen::VectorXd prior(q);
    prior << 1 / h.nu0_sq, 1 / h.nu_sq, 1 / h.nu_sq, 1 / h.lambda_sq[0];
    if (skew) prior[4] = 1 / h.nud_sq;
    const Eigen::VectorXd V = skew ? s0.V : g.state().V;
    Eigen::MatrixXd P = D.transpose() * D / s0.sigma_sq;
    P.diagonal() += prior;
    const Eigen::MatrixXd cov = P.inverse();
    const Eigen::VectorXd mean = cov * D.transpose() * V / s0.sigma_sq;
    const CoefficientPosterior cp = g.coefficient_posterior();
    CHECK(cp.active == std::vector<std::size_t>{0, 2});
    CHECK((cp.mean - mean).norm() < 1e-10);
    CHECK((cp.covariance - cov).norm() < 1e-10);

    Rng rng(7);
    std::vector<std::vector<double>> cols(q);
    std::vector<double> inactive;
    for (std::size_t k = 0; k < kDraws; ++k) {
      g.set_state(s0);
      g.update_coefficients(rng);
      const ModelState& s = g.state();
      cols[0].push_back(s.beta0);
      cols[1].push_back(s.beta_star[0]);
      cols[2].push_back(s.beta_star[2]);
      cols[3].push_back(s.alpha[0]);
      if (skew) cols[4].push_back(s.delta);
      inactive.push_back(s.beta_star[1]);
    }
    for (int a = 0; a < q; ++a) {
      const double m = mean[a], sd = std::sqrt(cov(a, a));
      CHECK(oracle::ks_distance(cols[a], [&](double x) { return oracle::Phi((x - m) / sd); }) < ks_crit(kDraws));
    }
    // Inactive beta* is drawn from the slab.
    CHECK(oracle::ks_distance(inactive, [&](double x) { return oracle::Phi(x / std::sqrt(h.nu_sq)); }) <
          ks_crit(kDraws));
    // Cross-moment of two block coordinates.
    double c01 = 0.0;
    for (std::size_t k = 0; k < kDraws; ++k) c01 += (cols[0][k] - mean[0]) * (cols[1][k] - mean[1]);
    c01 /= kDraws;
    CHECK(std::abs(c01 - cov(0, 1)) < 5 * std::sqrt(cov(0, 0) * cov(1, 1) / kDraws) * 1.5);
  }
}

TEST_CASE("gamma conditional matches enumeration") {
  const CensoredDataset d = micro_data();
  Eigen::MatrixXd Rm = Eigen::MatrixXd::Zero(3, 3);
  Rm(0, 1) = Rm(1, 0) = 0.5;
  Rm(0, 2) = Rm(2, 0) = 0.2;
  const RelationshipMatrix R(Rm);
  for (double eta : {0.0, 1.5}) {
    Hyperparams h(MrfPrior(-0.5, eta, R));
    h.lambda_sq = {4.0};
    h.nu_sq = 2.0;
    GibbsSampler g(d, h);
    ModelState s0 = micro_state(d);
    Rng rng(8);
    for (std::uint8_t g1 : {0, 1}) {
      s0.gamma = {1, g1, 0};
      // Oracle: the first coordinate of a scan sees the starting state.
      auto log_joint = [&](std::uint8_t g0) {
        ModelState s = s0;
        s.gamma[0] = g0;
        const Eigen::VectorXd e = s.V - mu_of(s, d) - s.delta * s.Z;
        const double lp = -0.5 * e.squaredNorm() / s.sigma_sq;
        double sum = 0.0, quad = 0.0;
        for (int a = 0; a < 3; ++a) {
          sum += s.gamma[a];
          for (int b = 0; b < 3; ++b) quad += s.gamma[a] * R(a, b) * s.gamma[b];
        }
        return lp + -0.5 * sum + eta * quad;
      };
      const double p1 = 1.0 / (1.0 + std::exp(log_joint(0) - log_joint(1)));
      std::size_t ones = 0;
      for (std::size_t k = 0; k < kDraws; ++k) {
        g.set_state(s0);
        g.update_gamma(rng);
        ones += g.state().gamma[0];
      }
      CHECK(std::abs(static_cast<double>(ones) / kDraws - p1) < 4 * std::sqrt(p1 * (1 - p1) / kDraws) + 1e-9);
    }
  }
}

TEST_CASE("sigma^2 and rho conditionals") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  GibbsSampler g(d, h);
  const ModelState s0 = micro_state(d);
  const Eigen::VectorXd e = s0.V - mu_of(s0, d) - s0.delta * s0.Z;
  const double shape = 0.5 * (h.xi0 + 10), rate = 0.5 * (h.xi0 * h.sigma0_sq + e.squaredNorm());
  double present = 0;
  for (auto u : s0.U) present += u;
  const double a = h.rho0 + present, b = h.rho1 + 10 - present;
  Rng rng(9);
  std::vector<double> s2, rho;
  for (std::size_t k = 0; k < kDraws; ++k) {
    g.set_state(s0);
    g.update_sigma_sq(rng);
    g.update_rho(rng);
    s2.push_back(g.state().sigma_sq);
    rho.push_back(g.state().rho);
  }
  CHECK(oracle::ks_distance(s2, [&](double x) { return boost::math::gamma_q(shape, rate / x); }) < ks_crit(kDraws));
  CHECK(oracle::ks_distance(rho, [&](double x) { return boost::math::ibeta(a, b, x); }) < ks_crit(kDraws));

  SUBCASE("fixed rho") {
    SamplerOptions opt;
    opt.fix_rho_one = true;
    GibbsSampler f(d, h, opt);
    f.set_state(s0);
    CHECK(f.state().rho == 1.0);
    for (int k = 0; k < 50; ++k) f.sweep(rng);
    CHECK(f.state().rho == 1.0);
    for (auto u : f.state().U) CHECK(u == 1);
  }
}

TEST_CASE("caches stay in sync across a sweep") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  GibbsSampler g(d, h);
  Rng rng(10);
  g.set_state(g.initial_state(rng));
  for (int k = 0; k < 300; ++k) {
    g.sweep(rng);
    const ModelState& s = g.state();
    REQUIRE(s.check_invariants(d).empty());
    const Eigen::VectorXd mu = mu_of(s, d);
    CHECK((g.linear_predictor() - mu).norm() < 1e-9);
    CHECK((g.residual() - (s.V - mu - s.delta * s.Z)).norm() < 1e-9);
  }
  const Eigen::VectorXd ll = g.observed_loglik();
  for (int i = 0; i < 10; ++i) CHECK(ll[i] == doctest::Approx(obs_loglik_i(g.state(), d, i)));
}

TEST_CASE("normal error model pins delta at 0") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  SamplerOptions opt;
  opt.error_model = ErrorModel::normal;
  GibbsSampler g(d, h, opt);
  Rng rng(11);
  g.set_state(g.initial_state(rng));
  for (int k = 0; k < 100; ++k) {
    g.sweep(rng);
    CHECK(g.state().delta == 0.0);
  }
}

TEST_CASE("chain bookkeeping and determinism") {
  const CensoredDataset d = micro_data();
  const Hyperparams h = micro_hyper();
  McmcConfig c;
  c.iterations = 110;
  c.burn_in = 10;
  c.thin = 25;
  CHECK(c.stored_draws() == 4);
  const PosteriorChain a = run_chain(d, h, c, {}, Rng(3));
  CHECK(a.draws.size() == 4);
  CHECK(a.loglik.rows() == 4);
  CHECK(a.loglik.cols() == 10);
  const PosteriorChain b = run_chain(d, h, c, {}, Rng(3));
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(a.draws[k].beta0 == b.draws[k].beta0);
    CHECK(a.draws[k].gamma == b.draws[k].gamma);
    CHECK(a.draws[k].V == b.draws[k].V);
  }
  CHECK(a.loglik == b.loglik);

  McmcConfig one = c;
  one.iterations = 35;
  one.burn_in = 10;
  CHECK(run_chain(d, h, one, {}, Rng(3)).draws.size() == 1);

  SamplerOptions lean;
  lean.store_latents = false;
  lean.store_loglik = false;
  const PosteriorChain l = run_chain(d, h, c, lean, Rng(3));
  CHECK(l.loglik.size() == 0);
  CHECK(l.draws[0].V.size() == 0);
  CHECK(l.draws[3].beta0 == a.draws[3].beta0);

  // Chains are independent of the thread count.
  McmcConfig multi = c;
  multi.chains = 3;
  multi.seed = 17;
  const auto serial = run_chains(d, h, multi, {}, 1);
  const auto threaded = run_chains(d, h, multi, {}, 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(serial[k].loglik == threaded[k].loglik);
  CHECK(serial[0].loglik != serial[1].loglik);

  McmcConfig bad = c;
  bad.burn_in = c.iterations;
  CHECK_THROWS(run_chain(d, h, bad, {}, Rng(1)));
  bad = c;
  bad.thin = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("error model names") {
  CHECK(error_model_from_string("normal") == ErrorModel::normal);
  CHECK(error_model_from_string("skew-normal") == ErrorModel::skew_normal);
  CHECK(std::string(to_string(ErrorModel::skew_normal)) == "skew-normal");
  CHECK_THROWS(error_model_from_string("t"));
}

TEST_CASE("null calibration: no signal, few inclusions") {
  Rng rng(12);
  CensoredDataset d;
  const int n = 120, p = 8;
  d.X = Eigen::MatrixXd::NullaryExpr(n, p, [&]() { return rng.normal(); });
  d.C = Eigen::MatrixXd::Zero(n, 0);
  d.psi = -0.6;
  for (int i = 0; i < n; ++i) {
    const double v = 0.8 * rng.normal() + 0.9 * std::abs(rng.normal());
    d.y.push_back(rng.uniform() < 0.85 && v >= d.psi ? std::optional<double>(v) : std::nullopt);
  }
  d.psi = d.min_observed();
  Hyperparams h(MrfPrior::independent(logit(0.1), p));
  h.nu_sq = 1.0;
  McmcConfig c;
  c.iterations = 4000;
  c.burn_in = 1000;
  c.thin = 2;
  const PosteriorChain ch = run_chain(d, h, c, {}, Rng(13));
  std::vector<double> pip(p, 0.0);
  double rho = 0.0;
  for (const auto& s : ch.draws) {
    for (int j = 0; j < p; ++j) pip[j] += s.gamma[j];
    rho += s.rho;
  }
  for (double& x : pip) {
    x /= static_cast<double>(ch.draws.size());
    CHECK(x < 0.5);
  }
  CHECK(std::abs(rho / static_cast<double>(ch.draws.size()) - 0.85) < 0.12);
}
