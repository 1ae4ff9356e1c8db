#pragma once

#include "selmeta/stats.hpp"

namespace selmeta {

/// Law of the two-sided p-value p = 2Φ(−|Y|/u) when Y ~ N(θ, η²),
/// η² = u² + σ².
struct PvalDensityParams {
  double theta = 0.0;
  double u = 1.0;
  double sigma2 = 0.0;

  double eta() const;
  /// Throws DomainError unless u > 0 and σ² >= 0 (both finite).
  void validate() const;
};

enum class DensityForm {
  /// u/(2η) prefactor and ±u in the φ arguments; the density of
  /// 2Φ(−|Y|/u) for Y ~ N(θ, η²).
  sampling_consistent,
  /// The same expression with σ in place of u. Kept for comparison only; it
  /// is not a density of the sampled p-values (it vanishes when σ = 0).
  literal_sigma,
};

/// Density on (0, 1). Throws DomainError outside (0, 1).
double pval_density(double p, const PvalDensityParams& params,
                    DensityForm form = DensityForm::sampling_consistent);

/// P(p-value <= p) in closed form. Throws DomainError outside (0, 1).
double pval_cdf(double p, const PvalDensityParams& params);

/// Inverse of pval_cdf by bisection. Throws DomainError outside (0, 1).
double pval_quantile(double q, const PvalDensityParams& params);

struct PvalueDraw {
  double p = 1.0;
  /// Signed outcome built from y* = −uΦ⁻¹(p/2) according to the SignRule.
  double y = 0.0;
};

enum class SignRule {
  /// y* or 2θ − y* on a fair coin. Symmetric about θ but only normal when
  /// θ = 0, so for θ != 0 the outcomes are not N(θ, η²) draws.
  reflect_about_theta,
  /// +y* with probability 1 / (1 + exp(−2θy*/η²)), else −y*: the sign of Y
  /// given |Y| = y*, which makes y an exact N(θ, η²) draw.
  conditional,
};

const char* to_string(SignRule r) noexcept;

enum class SamplingRoute {
  /// Draw Y ~ N(θ, η²) and transform (exact, no root finding).
  y_space,
  /// Draw a uniform and invert pval_cdf.
  quantile_inversion,
};

PvalueDraw sample_pvalue_and_sign(const PvalDensityParams& params, RngStream& rng,
                                  SamplingRoute route = SamplingRoute::y_space,
                                  SignRule sign = SignRule::reflect_about_theta);

}  // namespace selmeta
