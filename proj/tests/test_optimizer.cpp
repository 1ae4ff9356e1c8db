#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "selmeta/de.hpp"
#include "selmeta/errors.hpp"
#include "selmeta/fit.hpp"
#include "selmeta/inference.hpp"

using namespace selmeta;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return -s;
}

// Two Gaussian bumps on a curved valley; the global peak is the taller one.
double bimodal(std::span<const double> x) {
  const double a = x[0] - 1.5, b = x[1] - 1.0;
  const double c = x[0] + 1.2, d = x[1] + 0.8;
  return std::exp(-(a * a + 3.0 * b * b)) + 0.85 * std::exp(-(c * c + d * d) * 2.0) -
         0.01 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
}

MetaDataset simulate_null(std::size_t n, double theta, double sigma2, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<Study> studies;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform(0.1, 0.5);
    studies.push_back({std::to_string(i), theta + std::sqrt(u * u + sigma2) * rng.normal(), u});
  }
  return MetaDataset(std::move(studies));
}

const LogLikContext& education() {
  static const LogLikContext ctx(education_dataset());
  return ctx;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("DE finds the sphere maximum") {
  DEConfig c;
  c.bounds.assign(4, Bounds{-5.0, 5.0});
  c.value_tolerance = 1e-300;
  c.stagnation_generations = 100;
  c.max_generations = 5000;
  const DEResult r = de_maximize(sphere, c);
  for (double x : r.argmax) CHECK(std::abs(x) < 1e-6);
  CHECK(r.value > -1e-12);
}

TEST_CASE("DE honours an inactive ordering constraint") {
  DEConfig c;
  c.bounds.assign(3, Bounds{-5.0, 5.0});
  c.value_tolerance = 1e-300;
  c.stagnation_generations = 100;
  const Constraint ordered = [](std::span<const double> x) { return x[0] >= x[1] && x[1] >= x[2]; };
  const DEResult r = de_maximize(sphere, c, ordered);
  CHECK(r.argmax[0] >= r.argmax[1]);
  CHECK(r.argmax[1] >= r.argmax[2]);
  for (double x : r.argmax) CHECK(std::abs(x) < 1e-5);
}

TEST_CASE("sort repair keeps every trial ordered in 25 dimensions") {
  // Ordered target t_d = d / 25 inside [0, 1]^25.
  const std::size_t dim = 25;
  const Objective target = [dim](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double e = x[d] - static_cast<double>(d) / dim;
      s -= e * e;
    }
    return s;
  };
  DEConfig c;
  c.bounds.assign(dim, Bounds{0.0, 1.0});
  c.execution = Execution::serial;
  std::size_t rejected = 0;
  const Constraint ascending = [&rejected](std::span<const double> x) {
    const bool ok = std::is_sorted(x.begin(), x.end());
    if (!ok) ++rejected;
    return ok;
  };
  const Repair repair = [dim](std::span<double> x) { sort_leading(x, dim); };
  std::vector<std::vector<double>> start(10 * dim, std::vector<double>(dim));
  RngStream rng(5, 0);
  for (auto& m : start) {
    for (double& v : m) v = rng.uniform();
    std::sort(m.begin(), m.end());
  }
  const DEResult r = de_maximize(target, c, ascending, start, repair);
  CHECK(rejected == 0);
  CHECK(r.value > -1e-2);

  const DEResult penalty_only = de_maximize(target, c, ascending, start);
  CHECK(rejected > 0);
  CHECK(penalty_only.value < r.value);
  MESSAGE("repair " << r.value << ", penalty only " << penalty_only.value);
}

TEST_CASE("DE reaches the global optimum of a bimodal surface from 10 seeds") {
  // Dense-grid oracle, spacing 0.0025.
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 3200; ++i) {
    for (int j = 0; j <= 3200; ++j) {
      const double x[2] = {-4.0 + i * 0.0025, -4.0 + j * 0.0025};
      best = std::max(best, bimodal(x));
    }
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DEConfig c;
    c.bounds.assign(2, Bounds{-4.0, 4.0});
    c.seed = seed;
    const DEResult r = de_maximize(bimodal, c);
    CHECK(r.value >= best - 1e-4);
    CHECK(r.value <= best + 1e-4);
  }
}

TEST_CASE("infeasible members score the penalty and never win") {
  const Constraint positive = [](std::span<const double> x) { return x[0] > 0.0; };
  std::vector<std::vector<double>> pop{{1.0, 0.0}, {-0.001, 0.0}, {2.0, 2.0}};
  std::vector<double> values(3);
  evaluate_population(sphere, positive, pop, values, Execution::serial);
  CHECK(values[0] == -1.0);
  CHECK(values[1] == kPenalty);
  CHECK(values[2] == -8.0);

  DEConfig c;
  c.bounds.assign(2, Bounds{-3.0, 3.0});
  c.population_size = 20;
  std::vector<std::vector<double>> start(20, std::vector<double>{-0.01, 0.0});
  start[7] = {2.5, 2.5};
  const DEResult r = de_maximize(sphere, c, positive, start);
  CHECK(r.argmax[0] > 0.0);
  CHECK_FALSE(is_penalty(r.value));
}

TEST_CASE("configuration validation") {
  DEConfig c;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.bounds = {Bounds{1.0, 0.0}};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.bounds = {Bounds{0.0, 1.0}};
  CHECK_NOTHROW(validate(c));
  c.differential_weight = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.differential_weight = 0.8;
  c.crossover_rate = 1.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.crossover_rate = 0.9;
  c.population_size = 3;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("serial and parallel DE are bit-identical") {
  DEConfig c;
  c.bounds.assign(3, Bounds{-4.0, 4.0});
  c.seed = 77;
  c.execution = Execution::serial;
  const DEResult s = de_maximize(bimodal, c);
  c.execution = Execution::parallel;
  const DEResult p = de_maximize(bimodal, c);
  CHECK(s.argmax == p.argmax);
  CHECK(s.value == p.value);
  CHECK(s.generations == p.generations);

  DEConfig f;
  f.seed = 3;
  f.execution = Execution::serial;
  const FitResult fs = fit_monotone(education(), f);
  f.execution = Execution::parallel;
  const FitResult fp = fit_monotone(education(), f);
  CHECK(fs.weights.w == fp.weights.w);
  CHECK(fs.theta == fp.theta);
  CHECK(fs.sigma2 == fp.sigma2);
}

TEST_CASE("monotone fit on the education data") {
  DEConfig c;
  const FitResult a = fit_monotone(education(), c);
  const FitResult b = fit_monotone(education(), c);
  CHECK(a.weights.w == b.weights.w);
  CHECK(a.theta == b.theta);
  CHECK(a.loglik == b.loglik);
  CHECK(a.converged);
  CHECK(a.weights.is_monotone_normalized());
  CHECK(a.weights.min() >= kWeightFloor);
  CHECK(a.theta == doctest::Approx(0.14).epsilon(0.03 / 0.14));
  CHECK(a.sigma2 == doctest::Approx(0.11).epsilon(0.05 / 0.11));
  CHECK(a.loglik == doctest::Approx(log_likelihood(education(), a.weights, a.params())));
}

TEST_CASE("monotone fit is stable across seeds") {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double tlo = lo, thi = hi;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DEConfig c;
    c.seed = seed;
    const FitResult f = fit_monotone(education(), c);
    REQUIRE(f.weights.is_monotone_normalized());
    lo = std::min(lo, f.loglik);
    hi = std::max(hi, f.loglik);
    tlo = std::min(tlo, f.theta);
    thi = std::max(thi, f.theta);
  }
  CHECK(hi - lo <= 1e-4);
  CHECK(thi - tlo <= 0.01);
}

TEST_CASE("unconstrained fit: stationarity, scaling and fixed point") {
  const FitResult u = fit_unconstrained(education());
  REQUIRE(u.converged);
  CHECK(u.weights.normalization == Normalization::largest_p_group_is_one);
  CHECK(u.weights.w.front() == 1.0);
  const LogLikGradient g = log_likelihood_gradient(education(), u.weights.w, u.theta, u.sigma2);
  CHECK(std::abs(g.d_theta) < 1e-3);
  CHECK(std::abs(g.d_sigma2) < 1e-2);
  for (std::size_t j = 1; j < g.d_weights.size(); ++j) {
    CHECK(std::abs(g.d_weights[j] * u.weights.w[j]) < 1e-3);
  }
  // Weights rise towards the small-p groups on this dataset.
  CHECK(u.weights.w.back() > u.weights.w.front());

  for (double c : {0.5, 2.0, 7.0}) {
    std::vector<double> cw = u.weights.w;
    for (double& x : cw) x *= c;
    CHECK(log_likelihood(education(), cw, u.theta, u.sigma2) - u.loglik ==
          doctest::Approx(std::log(c)).epsilon(1e-10));
  }

  UnconstrainedOptions again;
  again.start_weights = u.weights;
  again.start_params = u.params();
  const FitResult v = fit_unconstrained(education(), again);
  CHECK(v.loglik >= u.loglik - 1e-9);
  CHECK(v.theta == doctest::Approx(u.theta).epsilon(1e-4));
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(v.weights.w[j] == doctest::Approx(u.weights.w[j]).epsilon(1e-3));
  }
}

TEST_CASE("unconstrained fit stays put at a DE-located optimum") {
  // Synthetic instance: solve the w_1 = 1 problem by DE over a wide box, then
  // start the coordinate Newton there.
  const LogLikContext ctx(simulate_null(8, 0.2, 0.05, 35));
  const std::size_t k = ctx.k();
  DEConfig c;
  c.bounds.assign(k - 1, Bounds{0.05, 20.0});
  c.bounds.push_back({-1.0, 1.5});
  c.bounds.push_back({0.0, 1.0});
  c.value_tolerance = 1e-12;
  c.stagnation_generations = 400;
  const DEResult de = de_maximize(
      [&](std::span<const double> x) {
        std::vector<double> w{1.0};
        w.insert(w.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k - 1));
        return log_likelihood(ctx, w, x[k - 1], x[k]);
      },
      c);
  std::vector<double> w{1.0};
  w.insert(w.end(), de.argmax.begin(), de.argmax.begin() + static_cast<std::ptrdiff_t>(k - 1));
  const bool interior = std::all_of(de.argmax.begin(), de.argmax.begin() + long(k - 1),
                                    [](double x) { return x > 0.06 && x < 19.0; });
  REQUIRE(interior);

  UnconstrainedOptions start;
  start.start_weights = StepWeights{w, Normalization::largest_p_group_is_one};
  start.start_params = ModelParams{de.argmax[k - 1], de.argmax[k]};
  const FitResult f = fit_unconstrained(ctx, start);
  CHECK(f.loglik >= de.value - 1e-9);
  CHECK(f.loglik <= de.value + 1e-4);
  CHECK(f.theta == doctest::Approx(de.argmax[k - 1]).epsilon(0.01));
}

TEST_CASE("monotone never beats unconstrained after aligning the scale") {
  std::vector<MetaDataset> sets{education_dataset()};
  for (std::uint64_t s = 0; s < 5; ++s) sets.push_back(simulate_null(8 + 3 * s, 0.3, 0.1, 50 + s));
  for (const MetaDataset& d : sets) {
    const LogLikContext ctx(d);
    const FitResult mono = fit_monotone(ctx, DEConfig{});
    const FitResult unc = fit_unconstrained(ctx);
    const FitResult aligned = to_largest_p_reference(mono, ctx.lambda1());
    CHECK(aligned.weights.w.front() == 1.0);
    CHECK(aligned.loglik == doctest::Approx(log_likelihood(ctx, aligned.weights, aligned.params())));
    CHECK(aligned.loglik <= unc.loglik + 1e-6);
  }
}

TEST_CASE("random-effects fits") {
  const FitResult dl = fit_random_effects(education_dataset());
  CHECK(dl.theta == doctest::Approx(0.26).epsilon(0.03 / 0.26));
  CHECK(dl.sigma2 == doctest::Approx(0.30).epsilon(0.08 / 0.30));
  CHECK(dl.sigma2 == doctest::Approx(dersimonian_laird_tau2(education_dataset())));
  CHECK(dl.theta == doctest::Approx(pooled_mean(education_dataset(), dl.sigma2)));
  for (double w : dl.weights.w) CHECK(w == 1.0);

  const MetaDataset same({{"a", 0.4, 0.2}, {"b", 0.4, 0.2}, {"c", 0.4, 0.2}, {"d", 0.4, 0.2}});
  for (auto est : {RandomEffectsEstimator::dersimonian_laird,
                   RandomEffectsEstimator::maximum_likelihood}) {
    const FitResult f = fit_random_effects(same, est);
    CHECK(f.theta == doctest::Approx(0.4));
    CHECK(f.sigma2 == 0.0);
  }

  // ML: attained likelihood dominates a σ² grid with θ profiled.
  const FitResult ml =
      fit_random_effects(education_dataset(), RandomEffectsEstimator::maximum_likelihood);
  for (double s2 = 0.0; s2 <= 2.0; s2 += 0.01) {
    const double l = oracle::normal_loglik(education_dataset(),
                                           pooled_mean(education_dataset(), s2), s2);
    REQUIRE(ml.loglik >= l - 1e-9);
  }
}

TEST_CASE("null data give a near-constant monotone fit") {
  // n = 40 under w ≡ 1: the monotone maximum may exceed the random-effects
  // maximum only by chi-square noise on k − 1 = 20 extra parameters.
  const MetaDataset d = simulate_null(40, 0.2, 0.04, 404);
  const LogLikContext ctx(d);
  const FitResult mono = fit_monotone(ctx, DEConfig{});
  const FitResult re = fit_random_effects(d, RandomEffectsEstimator::maximum_likelihood);
  CHECK(mono.loglik >= re.loglik - 1e-6);
  CHECK(2.0 * (mono.loglik - re.loglik) <= 45.31);  // χ²₂₀ 0.999 quantile
  CHECK(mono.weights.min() > 0.2);
}

}  // TEST_SUITE
