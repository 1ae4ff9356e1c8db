#pragma once

#include <optional>
#include <vector>

#include "selmeta/de.hpp"
#include "selmeta/likelihood.hpp"
#include "selmeta/model.hpp"

namespace selmeta {

enum class FitMethod { monotone_de, unconstrained_coordinate, random_effects };

const char* to_string(FitMethod m) noexcept;

struct FitResult {
  StepWeights weights;
  double theta = 0.0;
  double sigma2 = 0.0;
  /// log_likelihood(ctx, weights, theta, sigma2), re-evaluated at return.
  double loglik = 0.0;
  bool converged = false;
  /// DE generations, Newton cycles or Newton iterations, by method.
  int generations_used = 0;
  std::size_t evaluations = 0;
  FitMethod method = FitMethod::monotone_de;

  ModelParams params() const { return {theta, sigma2}; }
};

/// Search ranges for θ and σ² used when a DEConfig arrives without bounds.
/// θ spans [min y − 3 max η̃, max y + 3 max η̃] with η̃_i from the
/// DerSimonian–Laird heterogeneity; σ² spans [0, 10 × sample variance of y],
/// widened to the largest u_i² when the effects barely vary.
struct SearchBox {
  Bounds theta;
  Bounds sigma2;
};

SearchBox default_search_box(const MetaDataset& data);

/// Maximizes l over the monotone cone 1 = w_k >= ... >= w_1 >= kWeightFloor.
///
/// The DE vector is (w_1..w_{k-1}, θ, σ²); w_k stays pinned at 1 and
/// non-monotone candidates score kPenalty. If `config.bounds` is empty the
/// box is [kWeightFloor, 1]^(k-1) x default_search_box. The initial
/// population is drawn with sorted weights so every starting member is
/// feasible. `converged` mirrors DE stagnation.
FitResult fit_monotone(const LogLikContext& ctx, const DEConfig& config);

FitResult fit_monotone(const MetaDataset& data, double lambda1, const DEConfig& config);

/// The constraint used by fit_monotone on its DE vector.
bool monotone_feasible(std::span<const double> x, std::size_t k);

struct UnconstrainedOptions {
  double tolerance = 1e-8;
  int max_cycles = 10000;
  /// Optional start (weights with w_1 = 1 after renormalization, θ, σ²).
  /// Defaults to w ≡ 1 at the DerSimonian–Laird estimate.
  std::optional<StepWeights> start_weights;
  std::optional<ModelParams> start_params;
};

/// Dear–Begg unconstrained fit by cyclic one-coordinate Newton–Raphson.
///
/// w_1 is pinned at 1 (the scale of w only moves l by log(c)(λ_1 − 1) and is
/// fixed this way); w_2..w_k, θ and σ² are updated in turn. Each update uses
/// the analytic first derivative and a central difference of it for the
/// curvature; a step that leaves the domain or lowers l is halved. Stops when
/// a full cycle raises l by less than `tolerance`.
FitResult fit_unconstrained(const LogLikContext& ctx, const UnconstrainedOptions& options = {});

FitResult fit_unconstrained(const MetaDataset& data, double lambda1,
                            const UnconstrainedOptions& options = {});

enum class RandomEffectsEstimator { dersimonian_laird, maximum_likelihood };

const char* to_string(RandomEffectsEstimator e) noexcept;

/// Standard random-effects model (w ≡ 1). The moment estimator is the
/// default; maximum_likelihood maximizes the normal likelihood over σ² >= 0
/// with θ profiled out.
FitResult fit_random_effects(const MetaDataset& data,
                             RandomEffectsEstimator estimator = RandomEffectsEstimator::dersimonian_laird,
                             double lambda1 = 2.0);

/// DerSimonian–Laird heterogeneity estimate τ² (truncated at 0).
double dersimonian_laird_tau2(const MetaDataset& data);

/// Inverse-variance pooled mean for a given σ².
double pooled_mean(const MetaDataset& data, double sigma2);

/// Moves a monotone fit (w_k = 1) to the w_1 = 1 convention, shifting its
/// log-likelihood by log(c)(λ_1 − 1).
FitResult to_largest_p_reference(const FitResult& fit, double lambda1);

}  // namespace selmeta
