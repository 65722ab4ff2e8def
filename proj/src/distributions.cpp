#include "sncm/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sncm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
// Half-normal tail mass beyond this point is below 1e-18.
constexpr double kZMax = 9.0;
constexpr double kQuadTol = 1e-8;

void require_finite(double y, const char* what) {
  if (!std::isfinite(y)) throw std::domain_error(std::string(what) + ": non-finite argument");
}

// Standard normal restricted to [a, inf), a > 0: translated exponential proposal.
double tail_exponential(double a, Rng& rng) {
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / lambda;
    const double d = z - lambda;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

// Standard normal restricted to [a, b] with 0 <= a < b.
double right_window(double a, double b, Rng& rng) {
  if (std::isinf(b)) {
    if (a <= 0.0) {
      for (;;) {
        const double z = rng.normal();
        if (z >= a) return z;
      }
    }
    return tail_exponential(a, rng);
  }
  // Short windows: uniform proposal, acceptance >= exp((a^2 - b^2)/2).
  if (0.5 * (b * b - a * a) < 2.3) {
    for (;;) {
      const double z = a + (b - a) * rng.uniform();
      if (rng.uniform() <= std::exp(0.5 * (a * a - z * z))) return z;
    }
  }
  if (a <= 0.0) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a && z <= b) return z;
    }
  }
  for (;;) {
    const double z = tail_exponential(a, rng);
    if (z <= b) return z;
  }
}

double std_truncnorm(double a, double b, Rng& rng) {
  if (a >= 0.0) return right_window(a, b, rng);
  if (b <= 0.0) return -right_window(-b, -a, rng);
  // Window contains zero.
  if (b - a >= 2.5) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a && z <= b) return z;
    }
  }
  for (;;) {
    const double z = a + (b - a) * rng.uniform();
    if (rng.uniform() <= std::exp(-0.5 * z * z)) return z;
  }
}

}  // namespace

void SkewNormalParams::validate() const {
  if (!(scale_sq > 0.0) || !std::isfinite(scale_sq))
    throw std::domain_error("skew-normal: scale_sq must be positive and finite");
  if (!std::isfinite(location) || !std::isfinite(skew))
    throw std::domain_error("skew-normal: location and skew must be finite");
}

double SkewNormalParams::mean() const { return location + skew * kSqrt2OverPi; }

double SkewNormalParams::variance() const { return scale_sq + skew * skew * (1.0 - 2.0 / kPi); }

void TruncationWindow::validate() const {
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw std::domain_error("truncation window: lower must be < upper");
}

double normal_pdf(double z) { return std::exp(normal_logpdf(z)); }

double normal_logpdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_logcdf(double z) {
  if (z > -30.0) return std::log(normal_cdf(z));
  // Asymptotic Mills-ratio series.
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - kLogSqrt2Pi + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double sn_logpdf(double y, const SkewNormalParams& p) {
  require_finite(y, "sn_pdf");
  p.validate();
  const double sigma = std::sqrt(p.scale_sq);
  const double omega_sq = p.scale_sq + p.skew * p.skew;
  const double omega = std::sqrt(omega_sq);
  const double r = y - p.location;
  return std::log(2.0) - std::log(omega) + normal_logpdf(r / omega) +
         normal_logcdf(p.skew * r / (sigma * omega));
}

double sn_pdf(double y, const SkewNormalParams& p) { return std::exp(sn_logpdf(y, p)); }

double sn_cdf(double y, const SkewNormalParams& p) {
  p.validate();
  if (std::isnan(y)) throw std::domain_error("sn_cdf: NaN argument");
  if (y == kInf) return 1.0;
  if (y == -kInf) return 0.0;
  const double sigma = std::sqrt(p.scale_sq);
  const double r = y - p.location;
  if (p.skew == 0.0) return normal_cdf(r / sigma);

  auto integrand = [&](double z) {
    return 2.0 * normal_pdf(z) * normal_cdf((r - p.skew * z) / sigma);
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  const double kink = r / p.skew;
  if (kink > 0.0 && kink < kZMax) {
    total = Quad::integrate(integrand, 0.0, kink, 15, kQuadTol) +
            Quad::integrate(integrand, kink, kZMax, 15, kQuadTol);
  } else {
    total = Quad::integrate(integrand, 0.0, kZMax, 15, kQuadTol);
  }
  if (total < 0.0) return 0.0;
  if (total > 1.0) return 1.0;
  return total;
}

double sn_logcdf(double y, const SkewNormalParams& p) {
  const double f = sn_cdf(y, p);
  return f > 0.0 ? std::log(f) : -kInf;
}

double sn_sample(const SkewNormalParams& p, Rng& rng) {
  return p.location + std::sqrt(p.scale_sq) * rng.normal() + p.skew * std::fabs(rng.normal());
}

double half_normal_sample(Rng& rng) { return std::fabs(rng.normal()); }

double truncnorm_sample(double mean, double var, const TruncationWindow& window, Rng& rng) {
  if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(mean))
    throw std::domain_error("truncnorm_sample: invalid mean/variance");
  window.validate();
  const double sd = std::sqrt(var);
  const double a = (window.lower - mean) / sd;
  const double b = (window.upper - mean) / sd;
  if (std::isinf(a) && std::isinf(b)) return mean + sd * rng.normal();
  double x = mean + sd * std_truncnorm(a, b, rng);
  // Rounding at the boundary can land exactly on an endpoint.
  if (x <= window.lower) x = std::nextafter(window.lower, kInf);
  if (x >= window.upper) x = std::nextafter(window.upper, -kInf);
  return x;
}

double log_gamma_sample(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw std::domain_error("gamma: shape must be positive");
  if (shape >= 1.0) return std::log(rng.gamma(shape));
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  return std::log(rng.gamma(shape + 1.0)) + std::log(rng.uniform()) / shape;
}

double invgamma_sample(double shape, double rate, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("invgamma_sample: shape and rate must be positive");
  return rate / rng.gamma(shape);
}

double beta_sample(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("beta_sample: parameters must be positive");
  const double lx = log_gamma_sample(a, rng);
  const double ly = log_gamma_sample(b, rng);
  return inv_logit(lx - ly);
}

std::uint8_t bernoulli_sample(double prob, Rng& rng) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::domain_error("bernoulli_sample: prob outside [0,1]");
  if (prob == 0.0) return 0;
  if (prob == 1.0) return 1;
  return rng.uniform() < prob ? 1 : 0;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace sncm
