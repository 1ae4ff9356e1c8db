#include "selmeta/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "selmeta/errors.hpp"
#include "selmeta/stats.hpp"

namespace selmeta {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

bool admissible(std::span<const double> w, double theta, double sigma2) {
  if (!std::isfinite(theta) || !std::isfinite(sigma2) || sigma2 < 0.0) return false;
  for (double v : w) {
    if (!(v >= kWeightFloor) || !std::isfinite(v)) return false;
  }
  return true;
}

// Standardized positions of the upper (+b) and lower (−b) outcome-scale edge
// of a group boundary. The outermost edge b = +inf maps to ±inf.
struct Edge {
  double up;
  double lo;
};

Edge edge_at(const GroupedPvalues& g, std::size_t i, std::size_t j, double theta, double eta) {
  const double b = g.boundary(i, j);
  if (std::isinf(b)) {
    return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }
  return {(b - theta) / eta, (-b - theta) / eta};
}

// Calls f(j, H_ij) for every group of study i, sharing the CDF evaluation of
// each edge between the two groups it separates.
template <class F>
void visit_row(const GroupedPvalues& g, std::size_t i, double theta, double eta, F&& f) {
  const double origin = norm_cdf(-theta / eta);
  double prev_up = origin;
  double prev_lo = origin;
  for (std::size_t j = 1; j <= g.k; ++j) {
    double up = 1.0;
    double lo = 0.0;
    if (j < g.k) {
      const Edge e = edge_at(g, i, j, theta, eta);
      up = norm_cdf(e.up);
      lo = norm_cdf(e.lo);
    }
    f(j - 1, (up - prev_up) + (prev_lo - lo));
    prev_up = up;
    prev_lo = lo;
  }
}

double phi_times(double x) { return std::isinf(x) ? 0.0 : norm_pdf(x) * x; }
double phi_or_zero(double x) { return std::isinf(x) ? 0.0 : norm_pdf(x); }

}  // namespace

LogLikContext::LogLikContext(MetaDataset data, double lambda1)
    : data_(std::move(data)), groups_(build_groups(data_, lambda1)) {}

HMatrix h_matrix(const LogLikContext& ctx, double theta, double sigma2) {
  if (!(sigma2 >= 0.0)) throw DomainError("h_matrix: sigma2 must be non-negative");
  const auto& g = ctx.groups();
  HMatrix h(ctx.n(), g.k);
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const double u = ctx.data()[i].u;
    const double eta = std::sqrt(u * u + sigma2);
    visit_row(g, i, theta, eta, [&](std::size_t j, double hij) { h(i, j) = hij; });
  }
  return h;
}

std::vector<double> normalizing_constants(const HMatrix& h, std::span<const double> w) {
  if (w.size() != h.cols()) throw DomainError("normalizing_constants: weight count != k");
  for (double v : w) {
    if (!(v > 0.0)) throw DomainError("normalizing_constants: weights must be positive");
  }
  std::vector<double> a(h.rows(), 0.0);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < h.cols(); ++j) sum += w[j] * h(i, j);
    a[i] = sum;
  }
  return a;
}

double log_likelihood(const LogLikContext& ctx, std::span<const double> w, double theta,
                      double sigma2) {
  const auto& g = ctx.groups();
  if (w.size() != g.k) throw DomainError("log_likelihood: weight count != k");
  if (!admissible(w, theta, sigma2)) return kPenalty;

  double value = -static_cast<double>(ctx.n()) * kHalfLog2Pi;
  for (std::size_t j = 0; j < g.k; ++j) value += g.lambda[j] * std::log(w[j]);

  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const Study& s = ctx.data()[i];
    const double eta = std::sqrt(s.u * s.u + sigma2);
    const double z = (s.y - theta) / eta;
    double a = 0.0;
    visit_row(g, i, theta, eta, [&](std::size_t j, double hij) { a += w[j] * hij; });
    if (!(a > 0.0)) return kPenalty;
    value -= std::log(eta) + 0.5 * z * z + std::log(a);
  }
  return value;
}

LogLikGradient log_likelihood_gradient(const LogLikContext& ctx, std::span<const double> w,
                                       double theta, double sigma2) {
  const auto& g = ctx.groups();
  if (w.size() != g.k) throw DomainError("log_likelihood_gradient: weight count != k");
  LogLikGradient out;
  out.d_weights.assign(g.k, 0.0);
  out.value = log_likelihood(ctx, w, theta, sigma2);
  if (is_penalty(out.value)) return out;

  for (std::size_t j = 0; j < g.k; ++j) out.d_weights[j] = g.lambda[j] / w[j];

  std::vector<double> hrow(g.k);
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const Study& s = ctx.data()[i];
    const double eta2 = s.u * s.u + sigma2;
    const double eta = std::sqrt(eta2);
    const double r = s.y - theta;

    out.d_theta += r / eta2;
    out.d_sigma2 += -0.5 / eta2 + 0.5 * r * r / (eta2 * eta2);

    double a = 0.0;
    visit_row(g, i, theta, eta, [&](std::size_t j, double hij) {
      hrow[j] = hij;
      a += w[j] * hij;
    });

    // dA/dθ and dA/dσ² from the edge densities.
    double da_theta = 0.0;
    double da_sigma2 = 0.0;
    const Edge origin{-theta / eta, -theta / eta};
    Edge prev = origin;
    for (std::size_t j = 1; j <= g.k; ++j) {
      const Edge e = edge_at(g, i, j, theta, eta);
      const double dphi = phi_or_zero(e.up) - phi_or_zero(prev.up) + phi_or_zero(prev.lo) -
                          phi_or_zero(e.lo);
      const double dphix =
          phi_times(e.up) - phi_times(prev.up) + phi_times(prev.lo) - phi_times(e.lo);
      da_theta += w[j - 1] * (-dphi / eta);
      da_sigma2 += w[j - 1] * (-dphix / (2.0 * eta2));
      prev = e;
    }
    out.d_theta -= da_theta / a;
    out.d_sigma2 -= da_sigma2 / a;
    for (std::size_t j = 0; j < g.k; ++j) out.d_weights[j] -= hrow[j] / a;
  }
  return out;
}

CoercivityReport coercivity_probe(const LogLikContext& ctx, const StepWeights& start,
                                  const ModelParams& at, ProbeDirection direction,
                                  std::size_t weight_index, std::size_t points) {
  if (start.size() != ctx.k()) throw DomainError("coercivity_probe: weight count != k");
  if (start.w.back() != 1.0) throw DomainError("coercivity_probe: ray must keep w_k = 1");
  if (direction == ProbeDirection::weight_to_zero && weight_index + 1 >= ctx.k()) {
    throw DomainError("coercivity_probe: weight_index must address some w_j with j < k");
  }

  CoercivityReport report;
  std::vector<double> w = start.w;
  for (std::size_t m = 0; m < points; ++m) {
    const double scale = std::ldexp(1.0, static_cast<int>(m));
    if (direction == ProbeDirection::weight_to_zero &&
        start.w[weight_index] / scale < kWeightFloor) {
      break;
    }
    double theta = at.theta;
    double sigma2 = at.sigma2;
    double position = 0.0;
    switch (direction) {
      case ProbeDirection::theta_up:
        theta = position = at.theta + scale;
        break;
      case ProbeDirection::theta_down:
        theta = position = at.theta - scale;
        break;
      case ProbeDirection::sigma2_up:
        sigma2 = position = at.sigma2 * scale + scale;
        break;
      case ProbeDirection::sigma2_to_zero:
        sigma2 = position = at.sigma2 / scale;
        break;
      case ProbeDirection::weight_to_zero:
        w[weight_index] = position = start.w[weight_index] / scale;
        break;
    }
    const double value = log_likelihood(ctx, w, theta, sigma2);
    if (!std::isfinite(value) || is_penalty(value)) report.all_finite = false;
    report.positions.push_back(position);
    report.values.push_back(value);
  }

  const std::size_t taken = report.values.size();
  report.tail_strictly_decreasing = taken >= 2;
  for (std::size_t m = taken / 2 + 1; m < taken; ++m) {
    if (!(report.values[m] < report.values[m - 1])) report.tail_strictly_decreasing = false;
  }
  return report;
}

}  // namespace selmeta
