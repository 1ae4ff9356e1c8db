#include "selmeta/fit.hpp"

#include <algorithm>
#include <cmath>

#include "selmeta/errors.hpp"
#include "selmeta/stats.hpp"

namespace selmeta {

const char* to_string(FitMethod m) noexcept {
  switch (m) {
    case FitMethod::monotone_de:
      return "monotone_de";
    case FitMethod::unconstrained_coordinate:
      return "unconstrained_coordinate";
    case FitMethod::random_effects:
      return "random_effects";
  }
  return "unknown";
}

const char* to_string(RandomEffectsEstimator e) noexcept {
  switch (e) {
    case RandomEffectsEstimator::dersimonian_laird:
      return "dersimonian_laird";
    case RandomEffectsEstimator::maximum_likelihood:
      return "maximum_likelihood";
  }
  return "unknown";
}

double pooled_mean(const MetaDataset& data, double sigma2) {
  double num = 0.0;
  double den = 0.0;
  for (const Study& s : data.studies()) {
    const double w = 1.0 / (s.u * s.u + sigma2);
    num += w * s.y;
    den += w;
  }
  return num / den;
}

double dersimonian_laird_tau2(const MetaDataset& data) {
  double sw = 0.0;
  double sw2 = 0.0;
  for (const Study& s : data.studies()) {
    const double w = 1.0 / (s.u * s.u);
    sw += w;
    sw2 += w * w;
  }
  const double mean = pooled_mean(data, 0.0);
  double q = 0.0;
  for (const Study& s : data.studies()) q += (s.y - mean) * (s.y - mean) / (s.u * s.u);
  const double c = sw - sw2 / sw;
  const double df = static_cast<double>(data.size()) - 1.0;
  return c > 0.0 ? std::max(0.0, (q - df) / c) : 0.0;
}

SearchBox default_search_box(const MetaDataset& data) {
  const double tau2 = dersimonian_laird_tau2(data);
  double ymin = data[0].y;
  double ymax = data[0].y;
  double eta_max = 0.0;
  double u2_max = 0.0;
  double mean = 0.0;
  for (const Study& s : data.studies()) {
    ymin = std::min(ymin, s.y);
    ymax = std::max(ymax, s.y);
    eta_max = std::max(eta_max, std::sqrt(s.u * s.u + tau2));
    u2_max = std::max(u2_max, s.u * s.u);
    mean += s.y;
  }
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (const Study& s : data.studies()) var += (s.y - mean) * (s.y - mean);
  var /= static_cast<double>(data.size()) - 1.0;

  return {{ymin - 3.0 * eta_max, ymax + 3.0 * eta_max}, {0.0, std::max(10.0 * var, u2_max)}};
}

bool monotone_feasible(std::span<const double> x, std::size_t k) {
  double prev = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    if (!(x[j] >= prev)) return false;
    prev = x[j];
  }
  return prev <= 1.0;
}

FitResult fit_monotone(const LogLikContext& ctx, const DEConfig& config_in) {
  const std::size_t k = ctx.k();
  const std::size_t dim = k + 1;
  DEConfig config = config_in;
  if (config.bounds.empty()) {
    const SearchBox box = default_search_box(ctx.data());
    config.bounds.assign(k - 1, Bounds{kWeightFloor, 1.0});
    config.bounds.push_back(box.theta);
    config.bounds.push_back(box.sigma2);
  } else if (config.bounds.size() != dim) {
    throw ConfigError("fit_monotone: expected " + std::to_string(dim) + " bounds");
  }
  validate(config);

  // Feasible start: sorted weight draws.
  const std::size_t np = effective_population(config);
  RngStream init(derive_seed(config.seed, 0x5eed), 0);
  std::vector<std::vector<double>> start(np, std::vector<double>(dim));
  for (auto& member : start) {
    for (std::size_t d = 0; d < dim; ++d) {
      member[d] = init.uniform(config.bounds[d].lower, config.bounds[d].upper);
    }
    std::sort(member.begin(), member.begin() + static_cast<std::ptrdiff_t>(k - 1));
    for (std::size_t d = 0; d + 1 < k; ++d) {
      member[d] = std::clamp(member[d], config.bounds[d].lower, config.bounds[d].upper);
    }
  }

  const Objective objective = [&ctx, k](std::span<const double> x) {
    thread_local std::vector<double> w;
    w.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k - 1));
    w.push_back(1.0);
    return log_likelihood(ctx, w, x[k - 1], x[k]);
  };
  const Constraint constraint = [k](std::span<const double> x) { return monotone_feasible(x, k); };

  // Once k passes about ten, almost no rand/1/bin trial is monotone on its
  // own, so trials are sorted back into order before they are scored.
  const Repair repair = [k](std::span<double> x) { sort_leading(x, k - 1); };
  const DEResult de = de_maximize(objective, config, constraint, start, repair);

  FitResult fit;
  fit.method = FitMethod::monotone_de;
  fit.weights.normalization = Normalization::smallest_p_group_is_one;
  fit.weights.w.assign(de.argmax.begin(), de.argmax.begin() + static_cast<std::ptrdiff_t>(k - 1));
  fit.weights.w.push_back(1.0);
  fit.theta = de.argmax[k - 1];
  fit.sigma2 = de.argmax[k];
  fit.loglik = log_likelihood(ctx, fit.weights.w, fit.theta, fit.sigma2);
  fit.converged = de.converged;
  fit.generations_used = de.generations;
  fit.evaluations = de.evaluations;
  return fit;
}

FitResult fit_monotone(const MetaDataset& data, double lambda1, const DEConfig& config) {
  return fit_monotone(LogLikContext(data, lambda1), config);
}

namespace {

// Coordinate layout for the Newton cycle: 0..k-1 weights (0 is pinned), k = θ, k+1 = σ².
struct Point {
  std::vector<double> w;
  double theta;
  double sigma2;

  double& at(std::size_t c) {
    if (c < w.size()) return w[c];
    return c == w.size() ? theta : sigma2;
  }
};

double partial(const LogLikContext& ctx, const Point& p, std::size_t c) {
  const LogLikGradient g = log_likelihood_gradient(ctx, p.w, p.theta, p.sigma2);
  if (c < p.w.size()) return g.d_weights[c];
  return c == p.w.size() ? g.d_theta : g.d_sigma2;
}

bool in_domain(const Point& p) {
  if (!(p.sigma2 >= 0.0) || !std::isfinite(p.theta)) return false;
  return std::all_of(p.w.begin(), p.w.end(), [](double v) { return v >= kWeightFloor; });
}

}  // namespace

FitResult fit_unconstrained(const LogLikContext& ctx, const UnconstrainedOptions& options) {
  const std::size_t k = ctx.k();
  Point p;
  if (options.start_weights) {
    if (options.start_weights->size() != k) {
      throw DomainError("fit_unconstrained: start weights must have k entries");
    }
    p.w = renormalize(*options.start_weights, Normalization::largest_p_group_is_one).w;
  } else {
    p.w.assign(k, 1.0);
  }
  if (options.start_params) {
    p.theta = options.start_params->theta;
    p.sigma2 = options.start_params->sigma2;
  } else {
    p.sigma2 = dersimonian_laird_tau2(ctx.data());
    p.theta = pooled_mean(ctx.data(), p.sigma2);
  }

  auto value = [&](const Point& q) { return log_likelihood(ctx, q.w, q.theta, q.sigma2); };
  double current = value(p);
  std::size_t evaluations = 1;

  FitResult fit;
  fit.method = FitMethod::unconstrained_coordinate;
  int cycle = 0;
  for (; cycle < options.max_cycles; ++cycle) {
    const double cycle_start = current;
    for (std::size_t c = 1; c < k + 2; ++c) {
      const double x = p.at(c);
      const double g = partial(ctx, p, c);
      const double delta = 1e-5 * (1.0 + std::abs(x));

      Point probe = p;
      probe.at(c) = x + delta;
      const double g_hi = partial(ctx, probe, c);
      double curvature;
      if (c == k + 1 && x - delta < 0.0) {
        curvature = (g_hi - g) / delta;
      } else {
        probe.at(c) = x - delta;
        curvature = (g_hi - partial(ctx, probe, c)) / (2.0 * delta);
      }
      evaluations += 3;

      double step = curvature < 0.0 ? -g / curvature : std::copysign(0.1 * (1.0 + std::abs(x)), g);
      if (!std::isfinite(step) || step == 0.0) continue;
      for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
        Point cand = p;
        cand.at(c) = x + step;
        if (c == k + 1 && cand.sigma2 < 0.0) cand.sigma2 = 0.0;
        if (!in_domain(cand)) continue;
        const double v = value(cand);
        ++evaluations;
        if (v >= current) {
          p = std::move(cand);
          current = v;
          break;
        }
      }
    }
    if (std::abs(current - cycle_start) < options.tolerance) {
      fit.converged = true;
      ++cycle;
      break;
    }
  }

  fit.weights = {p.w, Normalization::largest_p_group_is_one};
  fit.theta = p.theta;
  fit.sigma2 = p.sigma2;
  fit.loglik = log_likelihood(ctx, fit.weights.w, fit.theta, fit.sigma2);
  fit.generations_used = cycle;
  fit.evaluations = evaluations;
  return fit;
}

FitResult fit_unconstrained(const MetaDataset& data, double lambda1,
                            const UnconstrainedOptions& options) {
  return fit_unconstrained(LogLikContext(data, lambda1), options);
}

namespace {

// Score of the θ-profiled normal log-likelihood in σ².
double profile_score(const MetaDataset& data, double sigma2) {
  const double theta = pooled_mean(data, sigma2);
  double score = 0.0;
  for (const Study& s : data.studies()) {
    const double eta2 = s.u * s.u + sigma2;
    const double r = s.y - theta;
    score += 0.5 * (r * r / (eta2 * eta2) - 1.0 / eta2);
  }
  return score;
}

double profile_value(const MetaDataset& data, double sigma2) {
  const double theta = pooled_mean(data, sigma2);
  double v = 0.0;
  for (const Study& s : data.studies()) {
    const double eta2 = s.u * s.u + sigma2;
    v -= 0.5 * (std::log(eta2) + (s.y - theta) * (s.y - theta) / eta2);
  }
  return v;
}

struct MlEstimate {
  double sigma2;
  int iterations;
  bool converged;
};

MlEstimate random_effects_ml(const MetaDataset& data) {
  if (profile_score(data, 0.0) <= 0.0) return {0.0, 0, true};
  double s2 = std::max(dersimonian_laird_tau2(data), 1e-4);
  double current = profile_value(data, s2);
  for (int it = 1; it <= 200; ++it) {
    const double g = profile_score(data, s2);
    const double delta = 1e-6 * (1.0 + s2);
    const double h = (profile_score(data, s2 + delta) - profile_score(data, std::max(0.0, s2 - delta))) /
                     (s2 + delta - std::max(0.0, s2 - delta));
    double step = h < 0.0 ? -g / h : std::copysign(0.5 * (1.0 + s2), g);
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const double cand = std::max(0.0, s2 + step);
      const double v = profile_value(data, cand);
      if (v >= current) {
        moved = std::abs(cand - s2) > 0.0;
        const double change = std::abs(cand - s2);
        s2 = cand;
        current = v;
        if (change < 1e-12 * (1.0 + s2)) return {s2, it, true};
        break;
      }
    }
    if (!moved) return {s2, it, true};
  }
  return {s2, 200, false};
}

}  // namespace

FitResult fit_random_effects(const MetaDataset& data, RandomEffectsEstimator estimator,
                             double lambda1) {
  FitResult fit;
  fit.method = FitMethod::random_effects;
  switch (estimator) {
    case RandomEffectsEstimator::dersimonian_laird:
      fit.sigma2 = dersimonian_laird_tau2(data);
      fit.converged = true;
      break;
    case RandomEffectsEstimator::maximum_likelihood: {
      const MlEstimate ml = random_effects_ml(data);
      fit.sigma2 = ml.sigma2;
      fit.converged = ml.converged;
      fit.generations_used = ml.iterations;
      break;
    }
  }
  fit.theta = pooled_mean(data, fit.sigma2);
  const LogLikContext ctx(data, lambda1);
  fit.weights = {std::vector<double>(ctx.k(), 1.0), Normalization::smallest_p_group_is_one};
  fit.loglik = log_likelihood(ctx, fit.weights.w, fit.theta, fit.sigma2);
  return fit;
}

FitResult to_largest_p_reference(const FitResult& fit, double lambda1) {
  FitResult out = fit;
  const double c = 1.0 / fit.weights.w.front();
  out.weights = renormalize(fit.weights, Normalization::largest_p_group_is_one);
  out.loglik = fit.loglik + std::log(c) * (lambda1 - 1.0);
  return out;
}

}  // namespace selmeta
