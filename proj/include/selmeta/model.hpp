#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace selmeta {

/// One trial: observed effect `y` with known sampling standard error `u`.
struct Study {
  std::string label;
  double y = 0.0;
  double u = 1.0;
};

/// Ordered collection of at least three studies (input order preserved).
/// Construction validates every study and the size.
class MetaDataset {
 public:
  static constexpr std::size_t kMinStudies = 3;

  explicit MetaDataset(std::vector<Study> studies);

  std::span<const Study> studies() const noexcept { return studies_; }
  const Study& operator[](std::size_t i) const { return studies_[i]; }
  std::size_t size() const noexcept { return studies_.size(); }

 private:
  std::vector<Study> studies_;
};

/// The ten open-vs-traditional education studies shipped in data/education.csv.
MetaDataset education_dataset();

/// 2 Φ(−|y|/u). Throws DomainError if u is not positive and finite.
double two_sided_pvalue(double y, double u);

/// Study indices ordered by decreasing p-value (equivalently increasing |y|/u).
/// Ties go to the larger u first, then to input order.
std::vector<std::size_t> order_by_pvalue(const MetaDataset& data);

/// Pairing of the ordered p-values into k weight categories.
///
/// Ranks are 1-based: rank 1 is the largest p-value. Group j (1-based)
/// covers p in (p_{2j}, p_{2j-2}] with p_0 = 1; the last group reaches down
/// to 0. On the outcome scale, study i's group j is
/// u_i * cut[j-1] <= |y| < u_i * cut[j] with cut[0] = 0, cut[k] = +inf and
/// cut[j] = |y|/u of the study at rank 2j.
struct GroupedPvalues {
  /// order[r] = index (into the dataset) of the study with rank r + 1.
  std::vector<std::size_t> order;
  /// size n + 2: p_sorted[0] = 1, p_sorted[h] = p_h, p_sorted[n + 1] = 0.
  std::vector<double> p_sorted;
  /// 0-based group index of each study, in dataset order.
  std::vector<std::size_t> group_of_study;
  std::size_t k = 0;
  /// Multiplicities λ_1..λ_k (λ_1 is configurable, defaults to 2).
  std::vector<double> lambda;
  /// size k + 1: test-statistic cut points |y|/u at the group edges.
  std::vector<double> cut_stat;
  /// size k + 1: the same edges on the p scale, decreasing from 1 to 0.
  std::vector<double> cut_p;
  /// Row-major n x (k + 1) outcome-scale boundaries b_{i,2j} = u_i * cut_stat[j].
  std::vector<double> boundaries;

  double boundary(std::size_t study, std::size_t edge) const {
    return boundaries[study * (k + 1) + edge];
  }
};

GroupedPvalues build_groups(const MetaDataset& data, double lambda1 = 2.0);

/// Number of weight categories for n studies.
constexpr std::size_t group_count(std::size_t n) noexcept { return n / 2 + 1; }

enum class Normalization {
  /// w_k = 1: the smallest-p group is the reference (monotone fit).
  smallest_p_group_is_one,
  /// w_1 = 1: the largest-p group is the reference (unconstrained fit).
  largest_p_group_is_one,
};

const char* to_string(Normalization n) noexcept;

/// Step weights w_1..w_k; index 0 is the largest-p group.
struct StepWeights {
  std::vector<double> w;
  Normalization normalization = Normalization::smallest_p_group_is_one;

  std::size_t size() const noexcept { return w.size(); }
  double min() const;
  /// True when 1 = w_k >= ... >= w_1 > 0 holds exactly.
  bool is_monotone_normalized() const;
};

/// Rescales `w` so the reference entry of `target` equals one.
/// The log-likelihood shifts by log(c)(λ_1 − 1) with c the applied factor.
StepWeights renormalize(const StepWeights& w, Normalization target);

/// Left-continuous step value at p ∈ [0, 1].
double weight_at_p(const StepWeights& w, const GroupedPvalues& groups, double p);

/// 0-based group whose interval (cut_p[j+1], cut_p[j]] contains p.
std::size_t group_at_p(const GroupedPvalues& groups, double p);

/// θ with the random-effects variance; η_i = sqrt(u_i² + σ²).
struct ModelParams {
  double theta = 0.0;
  double sigma2 = 0.0;

  double eta(double u) const;
};

}  // namespace selmeta
