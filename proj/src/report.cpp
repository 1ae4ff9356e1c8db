#include "selmeta/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "selmeta/errors.hpp"

namespace selmeta {

using Json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_decimal(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

MetaDataset parse_csv_text(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Study> studies;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (!header_seen) {
      if (line != "label,y,u") {
        throw ParseError("line " + std::to_string(line_no) + ": expected header \"label,y,u\"",
                         line_no);
      }
      header_seen = true;
      continue;
    }

    const auto fields = split_fields(line);
    const std::string where = "row " + std::to_string(line_no) + ": ";
    if (fields.size() != 3) {
      throw ParseError(where + "expected 3 fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    const auto y = parse_decimal(fields[1]);
    const auto u = parse_decimal(fields[2]);
    if (!y || !std::isfinite(*y)) throw ParseError(where + "y is not a finite number", line_no);
    if (!u || !std::isfinite(*u)) throw ParseError(where + "u is not a finite number", line_no);
    if (!(*u > 0.0)) throw ParseError(where + "u must be positive", line_no);
    studies.push_back({std::string(fields[0]), *y, *u});
  }
  if (!header_seen) throw ParseError("missing header");
  if (studies.size() < MetaDataset::kMinStudies) throw DatasetTooSmall(studies.size());
  return MetaDataset(std::move(studies));
}

MetaDataset parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv_text(buffer.str());
}

double round_sig12(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

InputSummary summarize_input(const LogLikContext& ctx, std::string source) {
  return {std::move(source), ctx.n(), ctx.k(), ctx.groups().lambda};
}

FitSummary summarize_fit(const FitResult& fit) {
  return {to_string(fit.method), fit.theta,           fit.sigma2, fit.loglik,
          fit.converged,         fit.generations_used, fit.evaluations};
}

WeightsSummary summarize_weights(const StepWeights& w, const GroupedPvalues& groups) {
  WeightsSummary s;
  s.normalization = to_string(w.normalization);
  s.values = w.w;
  for (std::size_t j = 0; j < groups.k; ++j) {
    s.groups.push_back({groups.cut_p[j + 1], groups.cut_p[j], w.w[j]});
  }
  return s;
}

CISummary summarize_ci(const ProfileCI& ci) {
  return {ci.level,      ci.lower,      ci.upper,  ci.lower_open,    ci.upper_open,
          ci.theta_hat,  ci.loglik_max, ci.cutoff, ci.all_converged, ci.profile_curve};
}

SelectionSummary summarize_selection(const SelectionTestResult& r, RandomEffectsEstimator est) {
  SelectionSummary s;
  s.T0 = r.T0;
  s.M = r.M;
  s.p_value = r.p_value;
  s.tail = to_string(r.tail);
  s.sign = to_string(r.sign);
  s.null_estimator = to_string(est);
  s.null_theta = r.null_fit.theta;
  s.null_sigma2 = r.null_fit.sigma2;
  s.retried = r.retried;
  s.nonconverged = r.nonconverged;
  s.replicate_stats = r.replicate_stats;
  std::sort(s.replicate_stats.begin(), s.replicate_stats.end());
  for (const ReplicateCurve& c : r.curves) s.curves.push_back({c.cut_p, c.weights});
  return s;
}

ConfigEcho echo_config(const DEConfig& config, std::size_t dimension, double lambda1) {
  DEConfig sized = config;
  if (sized.bounds.empty()) sized.bounds.resize(dimension);
  return {config.seed,
          lambda1,
          effective_population(sized),
          config.differential_weight,
          config.crossover_rate,
          config.max_generations,
          config.value_tolerance,
          config.stagnation_generations};
}

// --- JSON ------------------------------------------------------------------

namespace {

Json real(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_sig12(x);
}

Json reals(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(real(x));
  return a;
}

double get_real(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

std::vector<double> get_reals(const Json& j) {
  std::vector<double> out;
  for (const Json& x : j) out.push_back(get_real(x));
  return out;
}

}  // namespace

std::string serialize(const ReportDocument& doc) {
  Json j;
  j["schema_version"] = doc.schema_version;
  j["command"] = doc.command;
  j["input"] = {{"source", doc.input.source},
                {"n", doc.input.n},
                {"k", doc.input.k},
                {"lambda", reals(doc.input.lambda)}};
  j["fit"] = {{"method", doc.fit.method},
              {"theta", real(doc.fit.theta)},
              {"sigma2", real(doc.fit.sigma2)},
              {"loglik", real(doc.fit.loglik)},
              {"converged", doc.fit.converged},
              {"generations_used", doc.fit.generations_used},
              {"evaluations", doc.fit.evaluations}};
  Json groups = Json::array();
  for (const WeightGroup& g : doc.weights.groups) {
    groups.push_back({{"p_lower", real(g.p_lower)}, {"p_upper", real(g.p_upper)}, {"w", real(g.w)}});
  }
  j["weights"] = {{"normalization", doc.weights.normalization},
                  {"values", reals(doc.weights.values)},
                  {"groups", groups}};
  if (doc.profile_ci) {
    const CISummary& ci = *doc.profile_ci;
    Json curve = Json::array();
    for (const auto& [theta, l] : ci.profile_curve) curve.push_back({real(theta), real(l)});
    j["profile_ci"] = {{"level", real(ci.level)},
                       {"lower", real(ci.lower)},
                       {"upper", real(ci.upper)},
                       {"lower_open", ci.lower_open},
                       {"upper_open", ci.upper_open},
                       {"theta_hat", real(ci.theta_hat)},
                       {"loglik_max", real(ci.loglik_max)},
                       {"cutoff", real(ci.cutoff)},
                       {"all_converged", ci.all_converged},
                       {"profile_curve", curve}};
  }
  if (doc.selection_test) {
    const SelectionSummary& s = *doc.selection_test;
    Json curves = Json::array();
    for (const CurveSummary& c : s.curves) {
      curves.push_back({{"cut_p", reals(c.cut_p)}, {"weights", reals(c.weights)}});
    }
    j["selection_test"] = {{"T0", real(s.T0)},
                           {"M", s.M},
                           {"p_value", real(s.p_value)},
                           {"tail", s.tail},
                           {"sign", s.sign},
                           {"null_estimator", s.null_estimator},
                           {"null_theta", real(s.null_theta)},
                           {"null_sigma2", real(s.null_sigma2)},
                           {"retried", s.retried},
                           {"nonconverged", s.nonconverged},
                           {"replicate_stats", reals(s.replicate_stats)},
                           {"curves", curves}};
  }
  j["config"] = {{"seed", doc.config.seed},
                 {"lambda1", real(doc.config.lambda1)},
                 {"population_size", doc.config.population_size},
                 {"differential_weight", real(doc.config.differential_weight)},
                 {"crossover_rate", real(doc.config.crossover_rate)},
                 {"max_generations", doc.config.max_generations},
                 {"value_tolerance", real(doc.config.value_tolerance)},
                 {"stagnation_generations", doc.config.stagnation_generations}};
  return j.dump(2) + "\n";
}

ReportDocument parse_report(std::string_view json_text) {
  try {
    const Json j = Json::parse(json_text);
    ReportDocument doc;
    doc.schema_version = j.at("schema_version").get<int>();
    doc.command = j.at("command").get<std::string>();
    const Json& in = j.at("input");
    doc.input = {in.at("source").get<std::string>(), in.at("n").get<std::size_t>(),
                 in.at("k").get<std::size_t>(), get_reals(in.at("lambda"))};
    const Json& f = j.at("fit");
    doc.fit = {f.at("method").get<std::string>(),   get_real(f.at("theta")),
               get_real(f.at("sigma2")),            get_real(f.at("loglik")),
               f.at("converged").get<bool>(),       f.at("generations_used").get<int>(),
               f.at("evaluations").get<std::uint64_t>()};
    const Json& w = j.at("weights");
    doc.weights.normalization = w.at("normalization").get<std::string>();
    doc.weights.values = get_reals(w.at("values"));
    for (const Json& g : w.at("groups")) {
      doc.weights.groups.push_back(
          {get_real(g.at("p_lower")), get_real(g.at("p_upper")), get_real(g.at("w"))});
    }
    if (j.contains("profile_ci")) {
      const Json& c = j.at("profile_ci");
      CISummary ci;
      ci.level = get_real(c.at("level"));
      ci.lower = get_real(c.at("lower"));
      ci.upper = get_real(c.at("upper"));
      ci.lower_open = c.at("lower_open").get<bool>();
      ci.upper_open = c.at("upper_open").get<bool>();
      ci.theta_hat = get_real(c.at("theta_hat"));
      ci.loglik_max = get_real(c.at("loglik_max"));
      ci.cutoff = get_real(c.at("cutoff"));
      ci.all_converged = c.at("all_converged").get<bool>();
      for (const Json& pt : c.at("profile_curve")) {
        ci.profile_curve.emplace_back(get_real(pt.at(0)), get_real(pt.at(1)));
      }
      doc.profile_ci = std::move(ci);
    }
    if (j.contains("selection_test")) {
      const Json& s = j.at("selection_test");
      SelectionSummary sel;
      sel.T0 = get_real(s.at("T0"));
      sel.M = s.at("M").get<std::uint64_t>();
      sel.p_value = get_real(s.at("p_value"));
      sel.tail = s.at("tail").get<std::string>();
      sel.sign = s.at("sign").get<std::string>();
      sel.null_estimator = s.at("null_estimator").get<std::string>();
      sel.null_theta = get_real(s.at("null_theta"));
      sel.null_sigma2 = get_real(s.at("null_sigma2"));
      sel.retried = s.at("retried").get<std::uint64_t>();
      sel.nonconverged = s.at("nonconverged").get<std::uint64_t>();
      sel.replicate_stats = get_reals(s.at("replicate_stats"));
      for (const Json& c : s.at("curves")) {
        sel.curves.push_back({get_reals(c.at("cut_p")), get_reals(c.at("weights"))});
      }
      doc.selection_test = std::move(sel);
    }
    const Json& c = j.at("config");
    doc.config = {c.at("seed").get<std::uint64_t>(),
                  get_real(c.at("lambda1")),
                  c.at("population_size").get<std::uint64_t>(),
                  get_real(c.at("differential_weight")),
                  get_real(c.at("crossover_rate")),
                  c.at("max_generations").get<int>(),
                  get_real(c.at("value_tolerance")),
                  c.at("stagnation_generations").get<int>()};
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

// --- plot data ---------------------------------------------------------------

std::vector<StepRow> plot_rows(const StepWeights& w, const GroupedPvalues& groups, PlotAxis axis) {
  if (w.size() != groups.k) throw DomainError("plot_rows: weight count != k");
  std::vector<StepRow> rows;
  const std::size_t k = groups.k;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t j = k - 1 - r;
    if (axis == PlotAxis::pscale) {
      rows.push_back({groups.cut_p[j + 1], groups.cut_p[j], w.w[j]});
    } else {
      rows.push_back({static_cast<double>(r) / static_cast<double>(k),
                      static_cast<double>(r + 1) / static_cast<double>(k), w.w[j]});
    }
  }
  return rows;
}

std::string plot_csv(const std::vector<StepRow>& rows) {
  std::string out = "x_left,x_right,w\n";
  char buf[96];
  for (const StepRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", r.x_left, r.x_right, r.w);
    out += buf;
  }
  return out;
}

std::vector<StepRow> parse_plot_csv(std::string_view text) {
  std::vector<StepRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view l = trim(line);
    if (l.empty()) continue;
    if (line_no == 1) {
      if (l != "x_left,x_right,w") throw ParseError("plot csv: bad header", 1);
      continue;
    }
    const auto fields = split_fields(l);
    if (fields.size() != 3) throw ParseError("plot csv: expected 3 fields", line_no);
    const auto a = parse_decimal(fields[0]);
    const auto b = parse_decimal(fields[1]);
    const auto c = parse_decimal(fields[2]);
    if (!a || !b || !c) throw ParseError("plot csv: non-numeric field", line_no);
    rows.push_back({*a, *b, *c});
  }
  return rows;
}

}  // namespace selmeta
