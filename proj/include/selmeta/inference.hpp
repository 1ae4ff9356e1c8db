#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "selmeta/de.hpp"
#include "selmeta/fit.hpp"
#include "selmeta/pvalue_distribution.hpp"

namespace selmeta {

// ---------------------------------------------------------------------------
// Profile likelihood for θ
// ---------------------------------------------------------------------------

struct ProfilePoint {
  double theta = 0.0;
  /// max over monotone w and σ² >= 0 of l(w, θ, σ²).
  double loglik = 0.0;
  StepWeights weights;
  double sigma2 = 0.0;
  bool converged = false;
};

/// Profile log-likelihood at fixed θ: DE over (w_1..w_{k-1}, σ²) with the
/// same monotone constraint and search box as fit_monotone.
ProfilePoint profile_loglik(const LogLikContext& ctx, double theta, const DEConfig& config);

struct ProfileCIOptions {
  double level = 0.95;
  /// Bisection stops once the bracket is narrower than this (θ units).
  double tolerance = 1e-3;
  /// First outward step; 0 picks the inverse-variance standard error of θ.
  double initial_step = 0.0;
  int max_doublings = 60;
  bool keep_curve = true;
};

struct ProfileCI {
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
  double theta_hat = 0.0;
  double loglik_max = 0.0;
  double cutoff = 0.0;
  /// Set when no sign change was found within max_doublings on that side.
  bool lower_open = false;
  bool upper_open = false;
  bool all_converged = true;
  /// Every (θ, profile log-likelihood) evaluated, sorted by θ.
  std::vector<std::pair<double, double>> profile_curve;
};

/// Solves 2(l_p(θ̂) − l_p(θ)) = χ²₁(level) on both sides of θ̂: the step
/// from θ̂ doubles until the statistic exceeds the cutoff, then the bracket
/// is bisected. `monotone_fit` supplies θ̂ and the full maximum.
ProfileCI profile_ci_theta(const LogLikContext& ctx, const FitResult& monotone_fit,
                           const DEConfig& config, const ProfileCIOptions& options = {});

// ---------------------------------------------------------------------------
// Monte-Carlo test of a constant weight function
// ---------------------------------------------------------------------------

/// Which replicates count against H0. Small T = min w signals selection, so the
/// default counts replicates at or below the observed statistic;
/// `at_least_observed` counts #{T0 <= T^(j)} instead.
enum class TailRule { at_most_observed, at_least_observed };

const char* to_string(TailRule t) noexcept;

struct SelectionTestOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  bool keep_curves = false;
  /// Parallelism over replicates; each replicate fit itself runs serially.
  Execution execution = Execution::parallel;
  RandomEffectsEstimator null_estimator = RandomEffectsEstimator::dersimonian_laird;
  SamplingRoute route = SamplingRoute::y_space;
  SignRule sign = SignRule::reflect_about_theta;
  double lambda1 = 2.0;
  TailRule tail = TailRule::at_most_observed;
};

/// Fitted step function of one replicate: weights[j] on (cut_p[j+1], cut_p[j]].
struct ReplicateCurve {
  std::vector<double> cut_p;
  std::vector<double> weights;
};

struct ReplicateOutcome {
  double statistic = 0.0;
  bool converged = false;
  bool retried = false;
  ReplicateCurve curve;
};

struct SelectionTestResult {
  double T0 = 0.0;
  /// T^(j) = min ŵ_j in replicate order j = 1..M.
  std::vector<double> replicate_stats;
  std::size_t M = 0;
  double p_value = 1.0;
  TailRule tail = TailRule::at_most_observed;
  SignRule sign = SignRule::reflect_about_theta;
  FitResult null_fit;
  FitResult observed_fit;
  std::size_t retried = 0;
  std::size_t nonconverged = 0;
  std::vector<ReplicateCurve> curves;
};

/// (1 + #{j : T^(j) <= T0}) / (1 + M) for at_most_observed,
/// (1 + #{j : T0 <= T^(j)}) / (1 + M) for at_least_observed.
double selection_pvalue(double T0, std::span<const double> replicate_stats,
                        TailRule tail = TailRule::at_most_observed);

/// A dataset with the same labels and u_i as `observed` whose outcomes are
/// redrawn from the p-value law at (θ, σ²), signed by `sign`.
MetaDataset simulate_null_dataset(const MetaDataset& observed, const ModelParams& null_params,
                                  RngStream& rng, SamplingRoute route = SamplingRoute::y_space,
                                  SignRule sign = SignRule::reflect_about_theta);

/// Replicate j (1-based): simulate, fit monotone, take min ŵ. A fit that does
/// not converge is repeated once with a fresh DE seed.
ReplicateOutcome run_replicate(const MetaDataset& observed, const ModelParams& null_params,
                               std::size_t j, const DEConfig& fit_config,
                               const SelectionTestOptions& options);

/// Null random-effects fit, observed monotone fit, M replicate fits, p-value.
/// Replicate j draws from RngStream(derive_seed(seed, 1), j) and fits with DE
/// seed derive_seed(seed, 2, j), so the outcome does not depend on the
/// execution mode or thread count.
SelectionTestResult selection_test(const MetaDataset& data, const DEConfig& fit_config,
                                   const SelectionTestOptions& options = {});

}  // namespace selmeta
