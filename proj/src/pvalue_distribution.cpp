#include "selmeta/pvalue_distribution.hpp"

#include <cmath>

#include "selmeta/errors.hpp"

namespace selmeta {

namespace {

void require_open_unit(double p, const char* who) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(who) + ": argument must lie in (0, 1)");
}

}  // namespace

double PvalDensityParams::eta() const { return std::sqrt(u * u + sigma2); }

void PvalDensityParams::validate() const {
  if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("p-value law: u must be positive");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("p-value law: sigma2 must be non-negative");
  }
  if (!std::isfinite(theta)) throw DomainError("p-value law: theta must be finite");
}

double pval_density(double p, const PvalDensityParams& params, DensityForm form) {
  require_open_unit(p, "pval_density");
  params.validate();
  const double eta = params.eta();
  const double scale = form == DensityForm::sampling_consistent ? params.u : std::sqrt(params.sigma2);
  const double z = norm_quantile(0.5 * p);  // negative
  const double plus = norm_pdf((-scale * z - params.theta) / eta);
  const double minus = norm_pdf((scale * z - params.theta) / eta);
  return scale / (2.0 * eta) * (plus + minus) / norm_pdf(z);
}

double pval_cdf(double p, const PvalDensityParams& params) {
  require_open_unit(p, "pval_cdf");
  params.validate();
  const double eta = params.eta();
  const double b = -params.u * norm_quantile(0.5 * p);
  return norm_cdf((params.theta - b) / eta) + norm_cdf((-b - params.theta) / eta);
}

double pval_quantile(double q, const PvalDensityParams& params) {
  require_open_unit(q, "pval_quantile");
  params.validate();
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0 || mid >= 1.0) break;
    if (pval_cdf(mid, params) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

const char* to_string(SignRule r) noexcept {
  switch (r) {
    case SignRule::reflect_about_theta:
      return "reflect_about_theta";
    case SignRule::conditional:
      return "conditional";
  }
  return "unknown";
}

PvalueDraw sample_pvalue_and_sign(const PvalDensityParams& params, RngStream& rng,
                                  SamplingRoute route, SignRule sign) {
  params.validate();
  PvalueDraw draw;
  double y_star = 0.0;
  if (route == SamplingRoute::y_space) {
    const double y = params.theta + params.eta() * rng.normal();
    draw.p = 2.0 * norm_cdf(-std::abs(y) / params.u);
    y_star = std::abs(y);
  } else {
    draw.p = pval_quantile(rng.uniform(), params);
    y_star = -params.u * norm_quantile_clamped(0.5 * draw.p);
  }
  if (sign == SignRule::reflect_about_theta) {
    draw.y = rng.bernoulli_half() ? 2.0 * params.theta - y_star : y_star;
  } else {
    const double eta2 = params.u * params.u + params.sigma2;
    const double positive = 1.0 / (1.0 + std::exp(-2.0 * params.theta * y_star / eta2));
    draw.y = rng.uniform() < positive ? y_star : -y_star;
  }
  return draw;
}

}  // namespace selmeta
