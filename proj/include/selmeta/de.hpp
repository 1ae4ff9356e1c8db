#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace selmeta {

/// Where data-parallel kernels run. `serial` is the reference path; the
/// parallel path must produce bit-identical results.
enum class Execution { serial, parallel };

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct DEConfig {
  /// 0 selects 10 x dimension.
  std::size_t population_size = 0;
  double differential_weight = 0.8;
  double crossover_rate = 0.9;
  int max_generations = 2000;
  /// Improvement of the best value that resets the stagnation counter.
  double value_tolerance = 1e-8;
  int stagnation_generations = 200;
  std::uint64_t seed = 1;
  /// One closed interval per coordinate. Callers that own a parameterization
  /// (the fitters) fill this in when left empty.
  std::vector<Bounds> bounds;
  Execution execution = Execution::parallel;
};

using Objective = std::function<double(std::span<const double>)>;
using Constraint = std::function<bool(std::span<const double>)>;
/// Edits a freshly built trial vector in place before it is evaluated.
using Repair = std::function<void(std::span<double>)>;

struct DEResult {
  std::vector<double> argmax;
  double value = 0.0;
  int generations = 0;
  std::size_t evaluations = 0;
  /// Stopped because the best value stagnated (as opposed to hitting
  /// max_generations).
  bool converged = false;
};

/// Validates `config` for a problem of the given dimension; throws ConfigError.
void validate(const DEConfig& config);

/// Population size actually used.
std::size_t effective_population(const DEConfig& config) noexcept;

/// Fills `values[m]` with objective(population[m]), or kPenalty where the
/// constraint rejects the member. Runs under OpenMP for Execution::parallel.
void evaluate_population(const Objective& objective, const Constraint& constraint,
                         std::span<const std::vector<double>> population,
                         std::span<double> values, Execution execution);

/// Maximizes `objective` over the bounded box by DE/rand/1/bin.
///
/// Members that violate `constraint` score kPenalty and therefore lose every
/// selection against a feasible member. Trial coordinates leaving the box are
/// reflected at the violated bound, and redrawn uniformly if the reflection
/// still lands outside. `initial_population`, when non-empty, replaces the
/// uniform start (each member clamped into the box; missing members are drawn
/// uniformly). `repair`, when set, runs on every trial after reflection and
/// before the constraint check. Mutation, crossover and selection run sequentially off a single
/// RngStream, so the result depends only on (objective, config) and never on
/// the execution mode.
DEResult de_maximize(const Objective& objective, const DEConfig& config,
                     const Constraint& constraint = {},
                     std::span<const std::vector<double>> initial_population = {},
                     const Repair& repair = {});

/// Sorts the first `count` coordinates ascending. With per-coordinate bounds
/// shared by those coordinates this keeps step weights monotone.
void sort_leading(std::span<double> x, std::size_t count);

}  // namespace selmeta
