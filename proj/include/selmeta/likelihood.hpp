#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "selmeta/model.hpp"

namespace selmeta {

/// Finite stand-in for −∞: returned for inadmissible parameters and given to
/// infeasible optimizer candidates. Far below any attainable log-likelihood.
inline constexpr double kPenalty = -1e15;

/// Smallest admissible weight; the optimizers search w_j in [kWeightFloor, ...].
inline constexpr double kWeightFloor = 1e-12;

inline bool is_penalty(double value) noexcept { return value <= 0.5 * kPenalty; }

/// n x k matrix of group probabilities: H(i, j) is the mass that
/// N(θ, η_i²) puts on the outcome-scale region of weight category j for
/// study i. Rows sum to one.
class HMatrix {
 public:
  HMatrix(std::size_t n, std::size_t k) : n_(n), k_(k), values_(n * k, 0.0) {}

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * k_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * k_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * k_, k_}; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> values_;
};

/// Dataset plus its p-value grouping; immutable once built.
class LogLikContext {
 public:
  explicit LogLikContext(MetaDataset data, double lambda1 = 2.0);

  const MetaDataset& data() const noexcept { return data_; }
  const GroupedPvalues& groups() const noexcept { return groups_; }
  std::span<const double> lambda() const noexcept { return groups_.lambda; }
  double lambda1() const noexcept { return groups_.lambda.front(); }
  std::size_t n() const noexcept { return data_.size(); }
  std::size_t k() const noexcept { return groups_.k; }

 private:
  MetaDataset data_;
  GroupedPvalues groups_;
};

HMatrix h_matrix(const LogLikContext& ctx, double theta, double sigma2);

/// A_i = Σ_j w_j H_ij. Throws DomainError on a non-positive weight.
std::vector<double> normalizing_constants(const HMatrix& h, std::span<const double> w);

/// Weighted log-likelihood l(w, θ, σ²). Returns kPenalty (never NaN) when a
/// weight is below kWeightFloor, σ² < 0, an argument is not finite, or some
/// A_i underflows to zero.
double log_likelihood(const LogLikContext& ctx, std::span<const double> w, double theta,
                      double sigma2);

inline double log_likelihood(const LogLikContext& ctx, const StepWeights& w,
                             const ModelParams& params) {
  return log_likelihood(ctx, w.w, params.theta, params.sigma2);
}

struct LogLikGradient {
  double value = 0.0;
  std::vector<double> d_weights;
  double d_theta = 0.0;
  double d_sigma2 = 0.0;
};

/// l and its analytic partial derivatives. Same admissibility rules as
/// log_likelihood; on a penalty value the derivatives are zero.
LogLikGradient log_likelihood_gradient(const LogLikContext& ctx, std::span<const double> w,
                                       double theta, double sigma2);

enum class ProbeDirection {
  theta_up,
  theta_down,
  sigma2_up,
  sigma2_to_zero,
  weight_to_zero,
};

struct CoercivityReport {
  std::vector<double> positions;  // parameter value at each probe point
  std::vector<double> values;     // l at each probe point
  bool all_finite = true;
  /// Strictly decreasing over the second half of the ray.
  bool tail_strictly_decreasing = false;
};

/// Evaluates l along a ray leaving `start` (w_k must equal 1). θ rays move by
/// ±2^m, the σ² ray scales by 2^m, the vanishing rays halve their
/// coordinate, for m = 0..points-1. `weight_index` selects w_j (j < k − 1)
/// for weight_to_zero; weight rays stop at kWeightFloor.
CoercivityReport coercivity_probe(const LogLikContext& ctx, const StepWeights& start,
                                  const ModelParams& at, ProbeDirection direction,
                                  std::size_t weight_index = 0, std::size_t points = 40);

}  // namespace selmeta
