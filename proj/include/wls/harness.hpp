#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wls/christoffel.hpp"
#include "wls/index_sets.hpp"
#include "wls/least_squares.hpp"
#include "wls/measures.hpp"
#include "wls/sampling.hpp"

namespace wls {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sample count as a function of n.
struct MRule {
  enum class Kind { Fixed, Linear, LogLinear, Chernoff };
  Kind kind = Kind::Linear;
  double value = 2.0;  ///< m for Fixed, c for Linear / LogLinear
  double delta = 0.5;  ///< Chernoff
  double epsilon = 0.1;
  double log_multiplier = 2.0;

  /// kappa_w only matters for the Chernoff rule; +inf there throws.
  Eigen::Index operator()(Eigen::Index n, double kappa_w) const;
  std::string name() const;
};

/// A sampling strategy paired with its weight. Label is the CSV value.
struct StrategyChoice {
  Strategy strategy = Strategy::MonteCarlo;
  WeightSpec weight = WeightSpec::monte_carlo();
  std::string label;

  /// "mc", "mixture", "per-basis", "discrete", optionally "/weight"
  /// (e.g. "mixture/reg:0.5"). Without a weight, mc uses w = 1 and the
  /// others use `default_weight`.
  static StrategyChoice parse(std::string_view s, const WeightSpec& default_weight);
};

/// A pass/fail check evaluated on the finished sweep.
struct Assertion {
  std::string name;
  /// median_less: median(metric | strategy) < median(metric | other) for every n
  /// median_le: median(metric | strategy) <= value for every n
  /// median_increasing: median(metric | strategy) strictly increasing in n
  /// max_le: max(metric | strategy) <= value over all rows
  /// failure_rate_le: stability failures / trials <= value in every cell
  /// decay_factor_ge: median at the smallest n / median at the largest n >= value
  std::string type;
  std::string metric = "cond";
  std::string strategy;  ///< empty: every strategy
  std::string other;
  double value = 0.0;
};

struct ExperimentConfig {
  std::string family = "uniform";
  int dim = 1;
  /// Kind only ("td", "hc", ...) together with n_values, or a full spec
  /// ("td:5") for a single fixed set.
  std::string index_set = "td";
  std::vector<StrategyChoice> strategies;
  std::vector<Eigen::Index> n_values;
  MRule m_rule;
  int trials = 1;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  std::string target = "in_span";
  EstimatorSpec estimator = estimator::Plain{};
  std::string output;
  std::string summary_output;  ///< empty: output + ".summary.csv"
  int threads = 1;             ///< 0: hardware concurrency
  double cell_budget_seconds = 0.0;  ///< 0: no budget
  bool record_timing = false;        ///< off keeps the CSV reproducible
  double stability_delta = 0.5;      ///< threshold of the failure indicator
  std::vector<Assertion> assertions;

  /// Throws ConfigError with the offending key.
  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig from_file(const std::string& path);
  void validate() const;
};

struct TrialRecord {
  std::string run_id;
  int trial = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::string strategy;
  double alpha_w = 0.0;
  double beta_w = 0.0;
  double cond = 0.0;
  double gram_deviation = 0.0;
  double l2_error = 0.0;
  double linf_error = 0.0;
  double best_approx_l2 = 0.0;
  double noise_level = 0.0;
  int redraw_count = 0;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
  /// "ok", or "censored:<reason>" with cond = inf and NaN errors.
  std::string status = "ok";

  bool censored() const noexcept { return status != "ok"; }
};

/// Column header of the trial CSV.
std::string trial_csv_header();
std::string to_csv_row(const TrialRecord& r);

struct CellSummary {
  Eigen::Index n = 0;
  std::string strategy;
  Eigen::Index m = 0;
  int trials = 0;
  int censored = 0;
  int stability_failures = 0;  ///< alpha_w^2 <= 1 - delta or beta_w^2 >= 1 + delta
  double cond_median = 0.0, cond_q10 = 0.0, cond_q90 = 0.0;
  double gram_median = 0.0, gram_q10 = 0.0, gram_q90 = 0.0;
  double l2_median = 0.0, l2_q10 = 0.0, l2_q90 = 0.0;
  double linf_median = 0.0;
  double best_approx_l2 = 0.0;
  double redraw_mean = 0.0;
};

std::string summary_csv_header();
std::string to_csv_row(const CellSummary& s);

struct AssertionOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string run_id;
  std::vector<TrialRecord> records;
  std::vector<CellSummary> cells;
  std::vector<AssertionOutcome> assertions;
  bool all_passed() const noexcept;
};

/// Linear-interpolation quantile (type 7) of the non-NaN values; +inf
/// entries sort last. NaN when nothing is left.
double quantile(std::vector<double> values, double p);

/// Runs the sweep. Trials of a cell run on `threads` workers with seeds
/// mix_seed(mix_seed(seed, n), trial), so the rows do not depend on the
/// thread count. Rows are handed to `sink` in (n, strategy, trial) order as
/// soon as they and their predecessors are done. Per-trial failures become
/// censored rows.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const TrialRecord&)>& sink = {});

/// Runs the sweep and writes the trial CSV (appending after an existing
/// header) and the summary CSV.
ExperimentResult run_experiment_to_files(const ExperimentConfig& cfg);

/// Deterministic run identifier: hex hash of the config's canonical form.
std::string run_id(const ExperimentConfig& cfg);

struct Target {
  TargetFunction f;
  /// Set for in_span: the exact coefficients in the basis order.
  std::optional<Eigen::VectorXd> coefficients;
};

/// "runge" (prod_k 1/(1+25 x_k^2)), "exp_sum" (exp(sum_k x_k / d)),
/// "abs_power" (|x_1|^{7/2}), "in_span" (random unit-norm element of the
/// basis span, drawn with `seed`).
Target builtin_target(std::string_view name, const OrthoBasis& basis, std::uint64_t seed);

/// Tensor Gauss size used for error norms: enough nodes to integrate
/// squares of the basis exactly, with headroom for smooth targets.
int error_quadrature_points(const OrthoBasis& basis);

struct KappaCompareConfig {
  std::vector<std::string> families{"uniform", "chebyshev1"};
  std::vector<IndexKind> kinds{IndexKind::TotalDegree, IndexKind::HyperbolicCross};
  int dim = 2;
  std::vector<Eigen::Index> n_values{5, 10, 20, 50, 100};
  WeightSpec weight = WeightSpec::monte_carlo();
};

struct KappaRow {
  std::string family;
  std::string index_set;
  int dim = 0;
  Eigen::Index n = 0;
  double kappa = 0.0;
  std::string bound_name;  ///< "n^2", "n^1.585", ... or "none"
  double bound = 0.0;      ///< NaN without a reference bound
  double ratio = 0.0;      ///< kappa / bound
  std::string status;      ///< "ok", "exceeds", "no-bound" or "censored:<reason>"
};

/// Reference bound for kappa(P_S) over lower sets, or nullopt.
std::optional<std::pair<std::string, double>> kappa_reference_bound(const MeasureFamily1D& fam,
                                                                    Eigen::Index n);

std::vector<KappaRow> compare_kappa(const KappaCompareConfig& cfg);
std::string kappa_csv_header();
std::string to_csv_row(const KappaRow& r);

/// Shortest round-trip decimal, "inf", "-inf" or "nan".
std::string format_double(double v);

}  // namespace wls
