#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selmeta/fit.hpp"
#include "selmeta/inference.hpp"
#include "selmeta/model.hpp"

namespace selmeta {

// ---------------------------------------------------------------------------
// Study CSV: header "label,y,u", dot decimals, one study per line.
// ---------------------------------------------------------------------------

MetaDataset parse_csv_text(std::string_view text);
MetaDataset parse_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Report document
// ---------------------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

/// Rounds to 12 significant digits, the precision every real is serialized with.
double round_sig12(double x);

struct InputSummary {
  std::string source;
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> lambda;
  bool operator==(const InputSummary&) const = default;
};

struct FitSummary {
  std::string method;
  double theta = 0.0;
  double sigma2 = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int generations_used = 0;
  std::uint64_t evaluations = 0;
  bool operator==(const FitSummary&) const = default;
};

/// One weight category on the p scale: w on (p_lower, p_upper].
struct WeightGroup {
  double p_lower = 0.0;
  double p_upper = 0.0;
  double w = 0.0;
  bool operator==(const WeightGroup&) const = default;
};

struct WeightsSummary {
  std::string normalization;
  std::vector<double> values;
  std::vector<WeightGroup> groups;
  bool operator==(const WeightsSummary&) const = default;
};

struct CISummary {
  double level = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool lower_open = false;
  bool upper_open = false;
  double theta_hat = 0.0;
  double loglik_max = 0.0;
  double cutoff = 0.0;
  bool all_converged = true;
  std::vector<std::pair<double, double>> profile_curve;
  bool operator==(const CISummary&) const = default;
};

struct CurveSummary {
  std::vector<double> cut_p;
  std::vector<double> weights;
  bool operator==(const CurveSummary&) const = default;
};

struct SelectionSummary {
  double T0 = 0.0;
  std::uint64_t M = 0;
  double p_value = 1.0;
  std::string tail;
  std::string sign;
  std::string null_estimator;
  double null_theta = 0.0;
  double null_sigma2 = 0.0;
  std::uint64_t retried = 0;
  std::uint64_t nonconverged = 0;
  /// Sorted ascending.
  std::vector<double> replicate_stats;
  std::vector<CurveSummary> curves;
  bool operator==(const SelectionSummary&) const = default;
};

struct ConfigEcho {
  std::uint64_t seed = 0;
  double lambda1 = 2.0;
  std::uint64_t population_size = 0;
  double differential_weight = 0.0;
  double crossover_rate = 0.0;
  int max_generations = 0;
  double value_tolerance = 0.0;
  int stagnation_generations = 0;
  bool operator==(const ConfigEcho&) const = default;
};

struct ReportDocument {
  int schema_version = kReportSchemaVersion;
  std::string command;
  InputSummary input;
  FitSummary fit;
  WeightsSummary weights;
  std::optional<CISummary> profile_ci;
  std::optional<SelectionSummary> selection_test;
  ConfigEcho config;
  bool operator==(const ReportDocument&) const = default;
};

InputSummary summarize_input(const LogLikContext& ctx, std::string source);
FitSummary summarize_fit(const FitResult& fit);
WeightsSummary summarize_weights(const StepWeights& w, const GroupedPvalues& groups);
CISummary summarize_ci(const ProfileCI& ci);
SelectionSummary summarize_selection(const SelectionTestResult& r, RandomEffectsEstimator est);
ConfigEcho echo_config(const DEConfig& config, std::size_t dimension, double lambda1);

/// Pretty-printed JSON; reals rounded to 12 significant digits.
std::string serialize(const ReportDocument& doc);
/// Inverse of serialize. Throws ParseError on malformed input.
ReportDocument parse_report(std::string_view json_text);

// ---------------------------------------------------------------------------
// Step-function plot data
// ---------------------------------------------------------------------------

enum class PlotAxis { pscale, groupscale };

struct StepRow {
  double x_left = 0.0;
  double x_right = 0.0;
  double w = 0.0;
  bool operator==(const StepRow&) const = default;
};

/// One row per category ordered by increasing x: the smallest-p group first.
/// pscale uses the observed p-value cut points; groupscale places the group
/// limits at i/k.
std::vector<StepRow> plot_rows(const StepWeights& w, const GroupedPvalues& groups, PlotAxis axis);

/// CSV with header "x_left,x_right,w".
std::string plot_csv(const std::vector<StepRow>& rows);
std::vector<StepRow> parse_plot_csv(std::string_view text);

}  // namespace selmeta
