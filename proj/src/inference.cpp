#include "selmeta/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>

#include "selmeta/errors.hpp"

namespace selmeta {

namespace {

// DE vector for the profile: (w_1..w_{k-1}, σ²).
ProfilePoint profile_at(const LogLikContext& ctx, double theta, const DEConfig& config_in,
                        const ProfilePoint* warm) {
  const std::size_t k = ctx.k();
  DEConfig config = config_in;
  const SearchBox box = default_search_box(ctx.data());
  config.bounds.assign(k - 1, Bounds{kWeightFloor, 1.0});
  config.bounds.push_back(box.sigma2);
  validate(config);

  const std::size_t np = effective_population(config);
  RngStream init(derive_seed(config.seed, 0x5eed), 0);
  std::vector<std::vector<double>> start(np, std::vector<double>(k));
  for (auto& member : start) {
    for (std::size_t d = 0; d < k; ++d) {
      member[d] = init.uniform(config.bounds[d].lower, config.bounds[d].upper);
    }
    std::sort(member.begin(), member.begin() + static_cast<std::ptrdiff_t>(k - 1));
  }
  if (warm != nullptr && warm->weights.size() == k) {
    std::copy(warm->weights.w.begin(), warm->weights.w.end() - 1, start[0].begin());
    start[0][k - 1] = std::clamp(warm->sigma2, box.sigma2.lower, box.sigma2.upper);
  }

  const Objective objective = [&ctx, k, theta](std::span<const double> x) {
    thread_local std::vector<double> w;
    w.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k - 1));
    w.push_back(1.0);
    return log_likelihood(ctx, w, theta, x[k - 1]);
  };
  const Constraint constraint = [k](std::span<const double> x) { return monotone_feasible(x, k); };
  const Repair repair = [k](std::span<double> x) { sort_leading(x, k - 1); };
  const DEResult de = de_maximize(objective, config, constraint, start, repair);

  ProfilePoint point;
  point.theta = theta;
  point.weights.w.assign(de.argmax.begin(), de.argmax.begin() + static_cast<std::ptrdiff_t>(k - 1));
  point.weights.w.push_back(1.0);
  point.sigma2 = de.argmax[k - 1];
  point.loglik = log_likelihood(ctx, point.weights.w, theta, point.sigma2);
  point.converged = de.converged;
  return point;
}

}  // namespace

ProfilePoint profile_loglik(const LogLikContext& ctx, double theta, const DEConfig& config) {
  if (!std::isfinite(theta)) throw DomainError("profile_loglik: theta must be finite");
  return profile_at(ctx, theta, config, nullptr);
}

ProfileCI profile_ci_theta(const LogLikContext& ctx, const FitResult& monotone_fit,
                           const DEConfig& config, const ProfileCIOptions& options) {
  ProfileCI ci;
  ci.level = options.level;
  ci.cutoff = chi2_quantile_1df(options.level);
  ci.theta_hat = monotone_fit.theta;
  if (!(options.tolerance > 0.0)) throw DomainError("profile_ci_theta: tolerance must be positive");

  std::map<double, ProfilePoint> evaluated;
  ProfilePoint at_hat;
  at_hat.theta = monotone_fit.theta;
  at_hat.weights = monotone_fit.weights;
  at_hat.sigma2 = monotone_fit.sigma2;
  at_hat.loglik = monotone_fit.loglik;
  at_hat.converged = monotone_fit.converged;
  const ProfilePoint refit = profile_at(ctx, ci.theta_hat, config, &at_hat);
  evaluated.emplace(ci.theta_hat, refit.loglik >= at_hat.loglik ? refit : at_hat);
  ci.loglik_max = evaluated.at(ci.theta_hat).loglik;
  ci.all_converged = monotone_fit.converged && refit.converged;

  auto profile = [&](double theta) -> double {
    auto found = evaluated.find(theta);
    if (found != evaluated.end()) return found->second.loglik;
    // Warm start from the nearest evaluated θ.
    auto after = evaluated.lower_bound(theta);
    const ProfilePoint* warm = nullptr;
    if (after == evaluated.end()) {
      warm = &std::prev(after)->second;
    } else if (after == evaluated.begin()) {
      warm = &after->second;
    } else {
      auto before = std::prev(after);
      warm = (theta - before->first <= after->first - theta) ? &before->second : &after->second;
    }
    ProfilePoint point = profile_at(ctx, theta, config, warm);
    ci.all_converged = ci.all_converged && point.converged;
    const double value = point.loglik;
    evaluated.emplace(theta, std::move(point));
    return value;
  };
  auto excess = [&](double theta) { return 2.0 * (ci.loglik_max - profile(theta)) - ci.cutoff; };

  double step = options.initial_step;
  if (!(step > 0.0)) {
    double info = 0.0;
    for (const Study& s : ctx.data().studies()) info += 1.0 / (s.u * s.u + monotone_fit.sigma2);
    step = 1.0 / std::sqrt(info);
  }

  auto solve_side = [&](double direction, bool& open) {
    double inside = ci.theta_hat;
    double outside = ci.theta_hat;
    double offset = step;
    bool bracketed = false;
    for (int m = 0; m <= options.max_doublings; ++m, offset *= 2.0) {
      const double candidate = ci.theta_hat + direction * offset;
      if (excess(candidate) > 0.0) {
        outside = candidate;
        bracketed = true;
        break;
      }
      inside = candidate;
    }
    if (!bracketed) {
      open = true;
      return inside;
    }
    while (std::abs(outside - inside) > options.tolerance) {
      const double mid = 0.5 * (inside + outside);
      (excess(mid) > 0.0 ? outside : inside) = mid;
    }
    return 0.5 * (inside + outside);
  };

  ci.lower = solve_side(-1.0, ci.lower_open);
  ci.upper = solve_side(+1.0, ci.upper_open);

  if (options.keep_curve) {
    for (const auto& [theta, point] : evaluated) ci.profile_curve.emplace_back(theta, point.loglik);
  }
  return ci;
}

const char* to_string(TailRule t) noexcept {
  return t == TailRule::at_most_observed ? "at_most_observed" : "at_least_observed";
}

double selection_pvalue(double T0, std::span<const double> replicate_stats, TailRule tail) {
  std::size_t extreme = 0;
  for (double t : replicate_stats) {
    if (tail == TailRule::at_most_observed ? t <= T0 : T0 <= t) ++extreme;
  }
  return (1.0 + static_cast<double>(extreme)) /
         (1.0 + static_cast<double>(replicate_stats.size()));
}

MetaDataset simulate_null_dataset(const MetaDataset& observed, const ModelParams& null_params,
                                  RngStream& rng, SamplingRoute route, SignRule sign) {
  std::vector<Study> studies;
  studies.reserve(observed.size());
  for (const Study& s : observed.studies()) {
    const PvalDensityParams law{null_params.theta, s.u, null_params.sigma2};
    const PvalueDraw draw = sample_pvalue_and_sign(law, rng, route, sign);
    studies.push_back({s.label, draw.y, s.u});
  }
  return MetaDataset(std::move(studies));
}

namespace {

DEConfig replicate_config(const DEConfig& base, std::uint64_t seed) {
  DEConfig config = base;
  config.seed = seed;
  config.bounds.clear();
  config.execution = Execution::serial;
  return config;
}

}  // namespace

ReplicateOutcome run_replicate(const MetaDataset& observed, const ModelParams& null_params,
                               std::size_t j, const DEConfig& fit_config,
                               const SelectionTestOptions& options) {
  RngStream rng(derive_seed(options.seed, 1), j);
  const LogLikContext ctx(
      simulate_null_dataset(observed, null_params, rng, options.route, options.sign),
      options.lambda1);

  FitResult fit = fit_monotone(ctx, replicate_config(fit_config, derive_seed(options.seed, 2, j)));
  ReplicateOutcome outcome;
  if (!fit.converged) {
    outcome.retried = true;
    FitResult again =
        fit_monotone(ctx, replicate_config(fit_config, derive_seed(options.seed, 3, j)));
    if (again.converged || again.loglik > fit.loglik) fit = std::move(again);
  }
  outcome.converged = fit.converged;
  outcome.statistic = fit.weights.min();
  if (options.keep_curves) {
    outcome.curve.cut_p = ctx.groups().cut_p;
    outcome.curve.weights = fit.weights.w;
  }
  return outcome;
}

SelectionTestResult selection_test(const MetaDataset& data, const DEConfig& fit_config,
                                   const SelectionTestOptions& options) {
  if (options.replicates < 1) throw DomainError("selection_test: M must be at least 1");

  SelectionTestResult result;
  result.M = options.replicates;
  result.tail = options.tail;
  result.sign = options.sign;
  result.null_fit = fit_random_effects(data, options.null_estimator, options.lambda1);
  result.observed_fit = fit_monotone(LogLikContext(data, options.lambda1), fit_config);
  result.T0 = result.observed_fit.weights.min();

  const ModelParams null_params = result.null_fit.params();
  std::vector<ReplicateOutcome> outcomes(options.replicates);
  const auto count = static_cast<std::ptrdiff_t>(options.replicates);
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic) if (options.execution == Execution::parallel)
  for (std::ptrdiff_t m = 0; m < count; ++m) {
    try {
      outcomes[m] = run_replicate(data, null_params, static_cast<std::size_t>(m) + 1, fit_config,
                                  options);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  result.replicate_stats.reserve(outcomes.size());
  for (ReplicateOutcome& o : outcomes) {
    result.replicate_stats.push_back(o.statistic);
    if (o.retried) ++result.retried;
    if (!o.converged) ++result.nonconverged;
    if (options.keep_curves) result.curves.push_back(std::move(o.curve));
  }
  result.p_value = selection_pvalue(result.T0, result.replicate_stats, options.tail);
  return result;
}

}  // namespace selmeta
