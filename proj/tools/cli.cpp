#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "selmeta/errors.hpp"
#include "selmeta/fit.hpp"
#include "selmeta/inference.hpp"
#include "selmeta/report.hpp"

namespace selmeta::cli {

namespace {

constexpr const char* kBuiltinEducation = "builtin:education";

struct CommonArgs {
  std::string input;
  double lambda1 = 2.0;
  std::uint64_t seed = 1;
  std::size_t population = 0;
  double differential_weight = 0.8;
  double crossover_rate = 0.9;
  int max_generations = 2000;
  double value_tolerance = 1e-8;
  int stagnation = 200;
  bool serial = false;
};

void add_common(CLI::App& cmd, CommonArgs& a) {
  cmd.add_option("input", a.input, "CSV with header label,y,u, or builtin:education")->required();
  cmd.add_option("--lambda1", a.lambda1, "Exponent of w_1 in the likelihood (> 1)")
      ->capture_default_str();
  cmd.add_option("--seed", a.seed, "Master RNG seed")->capture_default_str();
  cmd.add_option("--de-pop", a.population, "DE population size (0: 10 x dimension)")
      ->capture_default_str();
  cmd.add_option("--de-f", a.differential_weight, "DE differential weight")->capture_default_str();
  cmd.add_option("--de-cr", a.crossover_rate, "DE crossover rate")->capture_default_str();
  cmd.add_option("--de-max-gen", a.max_generations, "DE generation cap")->capture_default_str();
  cmd.add_option("--de-tol", a.value_tolerance, "DE improvement threshold")->capture_default_str();
  cmd.add_option("--de-stagnation", a.stagnation, "Generations without improvement before stopping")
      ->capture_default_str();
  cmd.add_flag("--serial", a.serial, "Disable OpenMP parallel evaluation");
}

DEConfig de_config(const CommonArgs& a) {
  DEConfig c;
  c.population_size = a.population;
  c.differential_weight = a.differential_weight;
  c.crossover_rate = a.crossover_rate;
  c.max_generations = a.max_generations;
  c.value_tolerance = a.value_tolerance;
  c.stagnation_generations = a.stagnation;
  c.seed = a.seed;
  c.execution = a.serial ? Execution::serial : Execution::parallel;
  return c;
}

MetaDataset load(const std::string& input) {
  if (input == kBuiltinEducation) return education_dataset();
  return parse_csv(input);
}

void check_lambda1(double lambda1) {
  if (!(lambda1 > 1.0) || !std::isfinite(lambda1)) {
    throw ConfigError("--lambda1 must be a finite number greater than 1");
  }
}

enum class Method { monotone, dearbegg, random_effects };

const std::map<std::string, Method> kMethods{{"monotone", Method::monotone},
                                             {"dearbegg", Method::dearbegg},
                                             {"random-effects", Method::random_effects}};

const std::map<std::string, RandomEffectsEstimator> kEstimators{
    {"dl", RandomEffectsEstimator::dersimonian_laird},
    {"ml", RandomEffectsEstimator::maximum_likelihood}};

FitResult run_fit(Method method, const LogLikContext& ctx, const DEConfig& config,
                  RandomEffectsEstimator estimator) {
  switch (method) {
    case Method::monotone:
      return fit_monotone(ctx, config);
    case Method::dearbegg:
      return fit_unconstrained(ctx);
    case Method::random_effects:
      break;
  }
  return fit_random_effects(ctx.data(), estimator, ctx.lambda1());
}

ReportDocument base_document(const std::string& command, const CommonArgs& a,
                             const LogLikContext& ctx, const FitResult& fit,
                             const DEConfig& config) {
  ReportDocument doc;
  doc.command = command;
  doc.input = summarize_input(ctx, a.input);
  doc.fit = summarize_fit(fit);
  doc.weights = summarize_weights(fit.weights, ctx.groups());
  doc.config = echo_config(config, ctx.k() + 1, a.lambda1);
  return doc;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

void summarize(std::ostream& err, const ReportDocument& doc) {
  err << doc.command << ": n = " << doc.input.n << ", k = " << doc.input.k << ", method "
      << doc.fit.method << "\n";
  err << "  theta = " << fmt(doc.fit.theta) << ", sigma2 = " << fmt(doc.fit.sigma2)
      << ", loglik = " << fmt(doc.fit.loglik) << (doc.fit.converged ? "" : "  [NOT CONVERGED]")
      << "\n  weights (" << doc.weights.normalization << "):";
  for (double w : doc.weights.values) err << ' ' << fmt(w);
  err << "\n";
  if (doc.profile_ci) {
    const CISummary& ci = *doc.profile_ci;
    err << "  " << fmt(100.0 * ci.level) << "% profile CI for theta: [" << fmt(ci.lower)
        << (ci.lower_open ? " (open)" : "") << ", " << fmt(ci.upper)
        << (ci.upper_open ? " (open)" : "") << "]\n";
  }
  if (doc.selection_test) {
    const SelectionSummary& s = *doc.selection_test;
    err << "  selection test: T0 = " << fmt(s.T0) << ", M = " << s.M
        << ", p = " << fmt(s.p_value) << " (null " << s.null_estimator
        << ": theta = " << fmt(s.null_theta) << ", sigma2 = " << fmt(s.null_sigma2) << ")";
    if (s.nonconverged > 0) err << ", " << s.nonconverged << " replicate fits not converged";
    err << "\n";
  }
}

int emit(std::ostream& out, std::ostream& err, const ReportDocument& doc, bool converged) {
  out << serialize(doc);
  summarize(err, doc);
  return converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Step-function selection models for meta-analysis", "selmeta"};
  app.require_subcommand(1);

  CommonArgs fit_args;
  std::string fit_method = "monotone";
  std::string fit_estimator = "dl";
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a weight function and (theta, sigma2)");
  add_common(*fit_cmd, fit_args);
  fit_cmd->add_option("--method", fit_method, "monotone | dearbegg | random-effects")
      ->check(CLI::IsMember(kMethods))
      ->capture_default_str();
  fit_cmd->add_option("--re-estimator", fit_estimator, "Random-effects estimator: dl | ml")
      ->check(CLI::IsMember(kEstimators))
      ->capture_default_str();

  CommonArgs ci_args;
  double ci_level = 0.95;
  double ci_tolerance = 1e-3;
  CLI::App* ci_cmd = app.add_subcommand("ci", "Profile-likelihood confidence interval for theta");
  add_common(*ci_cmd, ci_args);
  ci_cmd->add_option("--level", ci_level, "Confidence level in (0, 1)")->capture_default_str();
  ci_cmd->add_option("--tolerance", ci_tolerance, "Bisection width on theta")
      ->capture_default_str();

  CommonArgs st_args;
  std::size_t st_m = 1000;
  bool st_keep = false;
  std::string st_estimator = "dl";
  CLI::App* st_cmd =
      app.add_subcommand("selection-test", "Monte-Carlo test of a constant weight function");
  add_common(*st_cmd, st_args);
  st_cmd->add_option("--M", st_m, "Number of null replicates")->capture_default_str();
  st_cmd->add_flag("--keep-curves", st_keep, "Emit every replicate's fitted step function");
  std::string st_tail = "at-most";
  st_cmd->add_option("--tail", st_tail,
                     "Replicates counted: at-most (T_j <= T0) or at-least (T0 <= T_j)")
      ->check(CLI::IsMember({"at-most", "at-least"}))
      ->capture_default_str();
  std::string st_sign = "reflect";
  st_cmd->add_option("--sign", st_sign,
                     "Replicate signs: reflect (y* or 2 theta - y*, fair coin) or conditional "
                     "(sign of Y given |Y|)")
      ->check(CLI::IsMember({"reflect", "conditional"}))
      ->capture_default_str();
  st_cmd->add_option("--re-estimator", st_estimator, "Null random-effects estimator: dl | ml")
      ->check(CLI::IsMember(kEstimators))
      ->capture_default_str();

  CommonArgs plot_args;
  std::string plot_method = "monotone";
  std::string plot_axis = "pscale";
  CLI::App* plot_cmd = app.add_subcommand("plotdata", "Step-function table (CSV) for plotting");
  add_common(*plot_cmd, plot_args);
  plot_cmd->add_option("--method", plot_method, "monotone | dearbegg | random-effects")
      ->check(CLI::IsMember(kMethods))
      ->capture_default_str();
  plot_cmd->add_option("--axis", plot_axis, "pscale | groupscale")
      ->check(CLI::IsMember({"pscale", "groupscale"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints help/version to the given streams and maps them to exit 0.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (fit_cmd->parsed()) {
      check_lambda1(fit_args.lambda1);
      const LogLikContext ctx(load(fit_args.input), fit_args.lambda1);
      const DEConfig config = de_config(fit_args);
      const FitResult fit =
          run_fit(kMethods.at(fit_method), ctx, config, kEstimators.at(fit_estimator));
      return emit(out, err, base_document("fit", fit_args, ctx, fit, config), fit.converged);
    }

    if (ci_cmd->parsed()) {
      check_lambda1(ci_args.lambda1);
      if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
      if (!(ci_tolerance > 0.0)) throw ConfigError("--tolerance must be positive");
      const LogLikContext ctx(load(ci_args.input), ci_args.lambda1);
      const DEConfig config = de_config(ci_args);
      const FitResult fit = fit_monotone(ctx, config);
      ProfileCIOptions options;
      options.level = ci_level;
      options.tolerance = ci_tolerance;
      const ProfileCI ci = profile_ci_theta(ctx, fit, config, options);
      ReportDocument doc = base_document("ci", ci_args, ctx, fit, config);
      doc.profile_ci = summarize_ci(ci);
      return emit(out, err, doc, fit.converged && ci.all_converged);
    }

    if (st_cmd->parsed()) {
      check_lambda1(st_args.lambda1);
      if (st_m < 1) throw ConfigError("--M must be at least 1");
      const MetaDataset data = load(st_args.input);
      const LogLikContext ctx(data, st_args.lambda1);
      const DEConfig config = de_config(st_args);
      SelectionTestOptions options;
      options.replicates = st_m;
      options.seed = st_args.seed;
      options.keep_curves = st_keep;
      options.execution = config.execution;
      options.null_estimator = kEstimators.at(st_estimator);
      options.lambda1 = st_args.lambda1;
      options.tail = st_tail == "at-most" ? TailRule::at_most_observed : TailRule::at_least_observed;
      options.sign = st_sign == "reflect" ? SignRule::reflect_about_theta : SignRule::conditional;
      const SelectionTestResult r = selection_test(data, config, options);
      ReportDocument doc = base_document("selection-test", st_args, ctx, r.observed_fit, config);
      doc.selection_test = summarize_selection(r, options.null_estimator);
      return emit(out, err, doc, r.observed_fit.converged);
    }

    if (plot_cmd->parsed()) {
      check_lambda1(plot_args.lambda1);
      const LogLikContext ctx(load(plot_args.input), plot_args.lambda1);
      const DEConfig config = de_config(plot_args);
      const FitResult fit =
          run_fit(kMethods.at(plot_method), ctx, config, RandomEffectsEstimator::dersimonian_laird);
      const PlotAxis axis = plot_axis == "pscale" ? PlotAxis::pscale : PlotAxis::groupscale;
      out << plot_csv(plot_rows(fit.weights, ctx.groups(), axis));
      summarize(err, base_document("plotdata", plot_args, ctx, fit, config));
      return fit.converged ? kExitOk : kExitNotConverged;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    // DatasetTooSmall and ConfigError land here.
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace selmeta::cli
