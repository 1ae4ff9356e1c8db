#include "selmeta/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selmeta/errors.hpp"
#include "selmeta/stats.hpp"

namespace selmeta {

MetaDataset::MetaDataset(std::vector<Study> studies) : studies_(std::move(studies)) {
  if (studies_.size() < kMinStudies) throw DatasetTooSmall(studies_.size());
  for (std::size_t i = 0; i < studies_.size(); ++i) {
    const Study& s = studies_[i];
    if (!std::isfinite(s.y)) {
      throw DomainError("study " + std::to_string(i + 1) + ": effect y must be finite");
    }
    if (!(s.u > 0.0) || !std::isfinite(s.u)) {
      throw DomainError("study " + std::to_string(i + 1) +
                        ": standard error u must be positive and finite");
    }
  }
}

MetaDataset education_dataset() {
  return MetaDataset({{"1", 0.081, 0.45},
                      {"2", 0.308, 0.45},
                      {"3", -0.178, 0.23},
                      {"4", -0.234, 0.20},
                      {"5", 0.598, 0.45},
                      {"6", 0.563, 0.30},
                      {"7", 0.535, 0.22},
                      {"8", 0.779, 0.24},
                      {"9", 1.052, 0.32},
                      {"10", -0.583, 0.15}});
}

double two_sided_pvalue(double y, double u) {
  if (!(u > 0.0) || !std::isfinite(u)) {
    throw DomainError("two_sided_pvalue: u must be positive and finite");
  }
  return 2.0 * norm_cdf(-std::abs(y) / u);
}

std::vector<std::size_t> order_by_pvalue(const MetaDataset& data) {
  const auto studies = data.studies();
  std::vector<double> stat(studies.size());
  for (std::size_t i = 0; i < studies.size(); ++i) stat[i] = std::abs(studies[i].y) / studies[i].u;

  std::vector<std::size_t> order(studies.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (stat[a] != stat[b]) return stat[a] < stat[b];
    return studies[a].u > studies[b].u;
  });
  return order;
}

GroupedPvalues build_groups(const MetaDataset& data, double lambda1) {
  const std::size_t n = data.size();
  if (n < MetaDataset::kMinStudies) throw DatasetTooSmall(n);
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) {
    throw DomainError("build_groups: lambda1 must be positive and finite");
  }

  GroupedPvalues g;
  g.k = group_count(n);
  g.order = order_by_pvalue(data);

  std::vector<double> stat_by_rank(n + 1, 0.0);  // stat_by_rank[h] = |y|/u at rank h
  g.p_sorted.assign(n + 2, 0.0);
  g.p_sorted[0] = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    const Study& s = data[g.order[r]];
    stat_by_rank[r + 1] = std::abs(s.y) / s.u;
    g.p_sorted[r + 1] = two_sided_pvalue(s.y, s.u);
  }

  g.group_of_study.assign(n, 0);
  for (std::size_t r = 1; r <= n; ++r) {
    g.group_of_study[g.order[r - 1]] = std::min(r / 2, g.k - 1);
  }

  g.lambda.assign(g.k, 2.0);
  g.lambda.front() = lambda1;
  g.lambda.back() = (n % 2 == 1) ? 2.0 : 1.0;

  g.cut_stat.assign(g.k + 1, 0.0);
  g.cut_p.assign(g.k + 1, 0.0);
  g.cut_p[0] = 1.0;
  for (std::size_t j = 1; j < g.k; ++j) {
    g.cut_stat[j] = stat_by_rank[2 * j];
    g.cut_p[j] = g.p_sorted[2 * j];
  }
  g.cut_stat[g.k] = std::numeric_limits<double>::infinity();
  g.cut_p[g.k] = 0.0;

  g.boundaries.resize(n * (g.k + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= g.k; ++j) {
      g.boundaries[i * (g.k + 1) + j] = j == g.k ? g.cut_stat[j] : data[i].u * g.cut_stat[j];
    }
  }
  return g;
}

const char* to_string(Normalization n) noexcept {
  switch (n) {
    case Normalization::smallest_p_group_is_one:
      return "smallest_p_group_is_one";
    case Normalization::largest_p_group_is_one:
      return "largest_p_group_is_one";
  }
  return "unknown";
}

double StepWeights::min() const {
  if (w.empty()) throw DomainError("StepWeights::min on empty weights");
  return *std::min_element(w.begin(), w.end());
}

bool StepWeights::is_monotone_normalized() const {
  if (w.empty() || w.back() != 1.0 || !(w.front() > 0.0)) return false;
  return std::is_sorted(w.begin(), w.end());
}

StepWeights renormalize(const StepWeights& w, Normalization target) {
  if (w.w.empty()) throw DomainError("renormalize: empty weights");
  const double ref = target == Normalization::smallest_p_group_is_one ? w.w.back() : w.w.front();
  if (!(ref > 0.0)) throw DomainError("renormalize: reference weight must be positive");
  StepWeights out{w.w, target};
  for (double& v : out.w) v /= ref;
  if (target == Normalization::smallest_p_group_is_one) {
    out.w.back() = 1.0;
  } else {
    out.w.front() = 1.0;
  }
  return out;
}

std::size_t group_at_p(const GroupedPvalues& groups, double p) {
  for (std::size_t j = 0; j + 1 < groups.k; ++j) {
    if (p > groups.cut_p[j + 1]) return j;
  }
  return groups.k - 1;
}

double weight_at_p(const StepWeights& w, const GroupedPvalues& groups, double p) {
  if (w.size() != groups.k) throw DomainError("weight_at_p: weight count does not match k");
  return w.w[group_at_p(groups, p)];
}

double ModelParams::eta(double u) const { return std::sqrt(u * u + sigma2); }

}  // namespace selmeta
