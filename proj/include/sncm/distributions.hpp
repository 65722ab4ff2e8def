#pragma once

#include <cstdint>
#include <limits>

#include "sncm/rng.hpp"

namespace sncm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;   // log(sqrt(2*pi))

/**
 * Skew-normal in the latent-variable parameterization
 *
 *   Y = location + N(0, scale_sq) + skew * |N(0, 1)|,
 *
 * so the error mean is skew*sqrt(2/pi) and the error variance is
 * scale_sq + skew^2 * (1 - 2/pi).
 */
struct SkewNormalParams {
  double location = 0.0;
  double scale_sq = 1.0;
  double skew = 0.0;

  void validate() const;
  double mean() const;
  double variance() const;
};

/// Open interval (lower, upper); either end may be infinite.
struct TruncationWindow {
  double lower = -kInf;
  double upper = kInf;

  void validate() const;
  bool contains(double x) const { return x > lower && x < upper; }
};

double normal_pdf(double z);
double normal_logpdf(double z);
double normal_cdf(double z);
/// log Phi(z), accurate far into the lower tail.
double normal_logcdf(double z);
double normal_quantile(double p);

double sn_pdf(double y, const SkewNormalParams& p);
double sn_logpdf(double y, const SkewNormalParams& p);

/**
 * Skew-normal CDF by adaptive Gauss-Kronrod quadrature over the half-normal
 * mixing variable: F(y) = E_Z[ Phi((y - location - skew*Z) / sigma) ].
 * The integrand kink at z = (y - location)/skew is split out explicitly.
 * Falls back to Phi when skew == 0.
 */
double sn_cdf(double y, const SkewNormalParams& p);
double sn_logcdf(double y, const SkewNormalParams& p);

double sn_sample(const SkewNormalParams& p, Rng& rng);

double half_normal_sample(Rng& rng);

/**
 * Draw from N(mean, var) restricted to `window`.
 *
 * Standardized windows use Robert's (1995) mixed scheme: plain normal
 * rejection when the window straddles most of the mass, translated
 * exponential proposals for tail windows, uniform proposals for short
 * windows. Acceptance stays bounded away from zero for windows arbitrarily
 * far into either tail.
 */
double truncnorm_sample(double mean, double var, const TruncationWindow& window, Rng& rng);

/// Inverse-Gamma(shape, rate): density proportional to x^(-shape-1) exp(-rate/x).
double invgamma_sample(double shape, double rate, Rng& rng);
double beta_sample(double a, double b, Rng& rng);
std::uint8_t bernoulli_sample(double prob, Rng& rng);

/// log Gamma(shape, 1) draw, stable for tiny shapes.
double log_gamma_sample(double shape, Rng& rng);

double logit(double p);
double inv_logit(double x);
/// log(1 + exp(x)) without overflow.
double log1p_exp(double x);
double log_sum_exp(double a, double b);

}  // namespace sncm
