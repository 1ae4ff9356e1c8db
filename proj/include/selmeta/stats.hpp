#pragma once

#include <cstdint>
#include <random>

namespace selmeta {

/// Standard normal density.
double norm_pdf(double x) noexcept;

/// Standard normal distribution function. Accepts ±infinity.
double norm_cdf(double x) noexcept;

/// Inverse of norm_cdf. Throws DomainError unless 0 < p < 1.
double norm_quantile(double p);

/// norm_quantile after clamping p into [1e-300, 1 - 1e-16]; for interior
/// computations where an exact 0 or 1 can only come from rounding.
double norm_quantile_clamped(double p) noexcept;

/// Quantile of the chi-square distribution with one degree of freedom.
/// Throws DomainError unless 0 < level < 1.
double chi2_quantile_1df(double level);

/// Reproducible random stream identified by (seed, stream_id).
///
/// The engine state is derived from all four 32-bit halves of the pair through
/// std::seed_seq, so neighbouring stream ids give unrelated sequences. Variates
/// are produced from raw 64-bit draws with explicit transforms (no
/// std::*_distribution) so the sequence is identical across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via inversion.
  double normal();
  /// Fair coin.
  bool bernoulli_half() { return (engine_() >> 63) != 0; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Mixes (seed, a, b) into a new seed; used to give nested work (replicate,
/// retry) its own stream family.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

}  // namespace selmeta
