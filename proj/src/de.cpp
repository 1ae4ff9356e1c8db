#include "selmeta/de.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "selmeta/errors.hpp"
#include "selmeta/likelihood.hpp"
#include "selmeta/stats.hpp"

namespace selmeta {

void validate(const DEConfig& config) {
  if (config.bounds.empty()) throw ConfigError("DE: bounds are empty");
  for (const Bounds& b : config.bounds) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower > b.upper) {
      throw ConfigError("DE: every bound must be a finite interval with lower <= upper");
    }
  }
  if (config.population_size != 0 && config.population_size < 4) {
    throw ConfigError("DE: population_size must be at least 4");
  }
  if (!(config.differential_weight > 0.0 && config.differential_weight <= 2.0)) {
    throw ConfigError("DE: differential weight must lie in (0, 2]");
  }
  if (!(config.crossover_rate >= 0.0 && config.crossover_rate <= 1.0)) {
    throw ConfigError("DE: crossover rate must lie in [0, 1]");
  }
  if (config.max_generations < 1) throw ConfigError("DE: max_generations must be positive");
  if (!(config.value_tolerance > 0.0)) throw ConfigError("DE: value_tolerance must be positive");
  if (config.stagnation_generations < 1) {
    throw ConfigError("DE: stagnation_generations must be positive");
  }
}

std::size_t effective_population(const DEConfig& config) noexcept {
  if (config.population_size != 0) return config.population_size;
  return std::max<std::size_t>(4, 10 * config.bounds.size());
}

void evaluate_population(const Objective& objective, const Constraint& constraint,
                         std::span<const std::vector<double>> population,
                         std::span<double> values, Execution execution) {
  const auto count = static_cast<std::ptrdiff_t>(population.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(static) if (execution == Execution::parallel)
  for (std::ptrdiff_t m = 0; m < count; ++m) {
    try {
      const std::vector<double>& x = population[m];
      values[m] = (constraint && !constraint(x)) ? kPenalty : objective(x);
      if (std::isnan(values[m])) values[m] = kPenalty;
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

DEResult de_maximize(const Objective& objective, const DEConfig& config,
                     const Constraint& constraint,
                     std::span<const std::vector<double>> initial_population,
                     const Repair& repair) {
  validate(config);
  const std::size_t dim = config.bounds.size();
  const std::size_t np = effective_population(config);
  const auto& bounds = config.bounds;
  RngStream rng(config.seed, 0);

  std::vector<std::vector<double>> population(np, std::vector<double>(dim));
  for (std::size_t m = 0; m < np; ++m) {
    for (std::size_t d = 0; d < dim; ++d) {
      population[m][d] = m < initial_population.size()
                             ? std::clamp(initial_population[m][d], bounds[d].lower, bounds[d].upper)
                             : rng.uniform(bounds[d].lower, bounds[d].upper);
    }
  }
  std::vector<double> values(np);
  evaluate_population(objective, constraint, population, values, config.execution);

  DEResult result;
  result.evaluations = np;
  auto best_index = [&] {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                    values.begin());
  };
  double best = values[best_index()];
  double reference = best;
  int stagnant = 0;

  std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
  std::vector<double> trial_values(np);
  const double f = config.differential_weight;

  int generation = 0;
  while (generation < config.max_generations) {
    ++generation;
    for (std::size_t m = 0; m < np; ++m) {
      std::size_t r1, r2, r3;
      do r1 = rng.below(np); while (r1 == m);
      do r2 = rng.below(np); while (r2 == m || r2 == r1);
      do r3 = rng.below(np); while (r3 == m || r3 == r1 || r3 == r2);
      const std::size_t forced = rng.below(dim);
      std::vector<double>& trial = trials[m];
      for (std::size_t d = 0; d < dim; ++d) {
        const bool cross = rng.uniform() < config.crossover_rate || d == forced;
        if (!cross) {
          trial[d] = population[m][d];
          continue;
        }
        double v = population[r1][d] + f * (population[r2][d] - population[r3][d]);
        const Bounds& b = bounds[d];
        if (v < b.lower) v = b.lower + (b.lower - v);
        if (v > b.upper) v = b.upper - (v - b.upper);
        if (v < b.lower || v > b.upper) v = rng.uniform(b.lower, b.upper);
        trial[d] = v;
      }
      if (repair) repair(trial);
    }
    evaluate_population(objective, constraint, trials, trial_values, config.execution);
    result.evaluations += np;

    for (std::size_t m = 0; m < np; ++m) {
      if (trial_values[m] >= values[m]) {
        population[m].swap(trials[m]);
        values[m] = trial_values[m];
      }
    }

    best = values[best_index()];
    if (best - reference > config.value_tolerance) {
      reference = best;
      stagnant = 0;
    } else if (++stagnant >= config.stagnation_generations) {
      result.converged = true;
      break;
    }
  }

  const std::size_t bi = best_index();
  result.argmax = population[bi];
  result.value = values[bi];
  result.generations = generation;
  if (is_penalty(result.value)) result.converged = false;
  return result;
}

void sort_leading(std::span<double> x, std::size_t count) {
  std::sort(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(std::min(count, x.size())));
}

}  // namespace selmeta
