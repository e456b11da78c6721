#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "wls/harness.hpp"

using namespace wls;

namespace {

ExperimentConfig small_config() {
  return ExperimentConfig::from_json(R"({
    "family": "uniform", "dim": 1, "index_set": "td",
    "strategies": ["mc", "mixture", "per-basis/reg:0.5"],
    "n_values": [4, 8], "m_rule": "linear:5", "trials": 6,
    "noise_level": 0.01, "seed": 42, "target": "runge"
  })");
}

std::vector<std::string> rows_of(const ExperimentResult& r) {
  std::vector<std::string> out;
  for (const auto& t : r.records) out.push_back(to_csv_row(t));
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "wls_harness_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::filesystem::remove(p);
  std::filesystem::remove(p.string() + ".summary.csv");
  return p;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("config parsing and defaults") {
  const auto c = ExperimentConfig::from_json(R"({"n_values": [3]})");
  CHECK(c.family == "uniform");
  CHECK(c.strategies.size() == 2);
  CHECK(c.strategies[0].weight == WeightSpec::monte_carlo());
  CHECK(c.strategies[1].weight == WeightSpec::optimal());
  CHECK(c.trials == 1);
  CHECK(c.threads == 1);
  CHECK_FALSE(c.record_timing);

  const auto d = ExperimentConfig::from_json(R"({
    "family": "chebyshev1", "dim": 2, "index_set": "hc", "n_values": [5, 9],
    "weight": "reg:0.25", "strategies": ["mixture", "discrete/opt"],
    "m_rule": {"type": "chernoff", "delta": 0.4, "epsilon": 0.2},
    "estimator": "cond:0.4", "threads": 0,
    "assertions": [{"type": "median_le", "metric": "cond", "value": 3}]
  })");
  CHECK(d.strategies[0].weight == WeightSpec::regularized(0.25));
  CHECK(d.strategies[1].strategy == Strategy::DiscreteGrid);
  CHECK(d.strategies[1].weight == WeightSpec::optimal());
  CHECK(d.m_rule.kind == MRule::Kind::Chernoff);
  CHECK(d.m_rule.delta == 0.4);
  CHECK(d.assertions.size() == 1);
  CHECK(d.assertions[0].name == "median_le");
}

TEST_CASE("config errors name the problem") {
  const std::vector<std::string> bad = {
      "[1, 2]",
      "{not json",
      R"({"n_values": [3], "colour": "red"})",
      R"({"n_values": [3], "family": "beta"})",
      R"({"n_values": []})",
      R"({"n_values": [0]})",
      R"({"n_values": [3], "trials": 0})",
      R"({"n_values": [3], "trials": "many"})",
      R"({"n_values": [3], "noise_level": -1})",
      R"({"n_values": [3], "target": "sine"})",
      R"({"n_values": [10], "m_rule": "fixed:5"})",
      R"({"n_values": [10], "m_rule": "linear:0.5"})",
      R"({"n_values": [10], "m_rule": "chernoff:2:0.1"})",
      R"({"n_values": [10], "m_rule": {"type": "fixed"}})",
      R"({"n_values": [10], "m_rule": "quadratic:2"})",
      R"({"n_values": [3], "strategies": ["mc/opt"]})",
      R"({"n_values": [3], "strategies": []})",
      R"({"n_values": [3], "index_set": "sparse"})",
      R"({"n_values": [3], "estimator": "ridge"})",
      R"({"n_values": [3], "assertions": [{"type": "mean_le"}]})",
      R"({"n_values": [3], "assertions": [{"type": "median_less", "strategy": "mc"}]})",
      R"({"n_values": [3], "assertions": [{"type": "max_le", "metric": "speed"}]})",
  };
  for (const auto& s : bad) {
    INFO(s);
    CHECK_THROWS_AS(ExperimentConfig::from_json(s), ConfigError);
  }
  CHECK_THROWS_AS(ExperimentConfig::from_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("m rules") {
  MRule r;
  r.kind = MRule::Kind::Fixed;
  r.value = 50;
  CHECK(r(10, 0) == 50);
  r.kind = MRule::Kind::Linear;
  r.value = 3;
  CHECK(r(10, 0) == 30);
  r.kind = MRule::Kind::LogLinear;
  r.value = 2;
  CHECK(r(10, 0) == static_cast<Eigen::Index>(std::ceil(20 * std::log(10.0))));
  r.kind = MRule::Kind::Chernoff;
  CHECK(r(50, 100) == 6385);
  CHECK_THROWS(r(10, std::numeric_limits<double>::infinity()));
}

TEST_CASE("strategy choices") {
  const auto w = WeightSpec::optimal();
  CHECK(StrategyChoice::parse("mc", w).weight == WeightSpec::monte_carlo());
  CHECK(StrategyChoice::parse("mixture", w).weight == w);
  const auto s = StrategyChoice::parse("per-basis/reg:0.5", w);
  CHECK(s.strategy == Strategy::PerBasisInduced);
  CHECK(s.weight == WeightSpec::regularized(0.5));
  CHECK(s.label == "per-basis/reg:0.5");
  CHECK_THROWS(StrategyChoice::parse("mc/opt", w));
  CHECK_THROWS(StrategyChoice::parse("grid", w));
}

TEST_CASE("type-7 quantiles") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({1, 2, 3, 4}, 0.1) == doctest::Approx(1.3));
  CHECK(quantile({1, 2, 3, 4}, 0.9) == doctest::Approx(3.7));
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(quantile({nan, 5, nan, 1}, 0.5) == doctest::Approx(3.0));
  CHECK(std::isinf(quantile({1, inf, inf}, 0.5)));
  CHECK(std::isnan(quantile({nan}, 0.5)));
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  for (double v : {1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("one row per (n, strategy, trial) in order, with the CSV schema") {
  const auto cfg = small_config();
  const auto r = run_experiment(cfg);
  REQUIRE(r.records.size() == 2 * 3 * 6);
  CHECK(trial_csv_header() ==
        "run_id,trial,n,m,strategy,alpha_w,beta_w,cond,gram_deviation,l2_error,linf_error,"
        "best_approx_l2,noise_level,redraw_count,seed,wall_time_ms,status");
  std::size_t i = 0;
  for (Eigen::Index n : {4, 8}) {
    for (const char* s : {"mc", "mixture", "per-basis/reg:0.5"}) {
      for (int t = 0; t < 6; ++t, ++i) {
        const auto& rec = r.records[i];
        CHECK(rec.n == n);
        CHECK(rec.strategy == s);
        CHECK(rec.trial == t);
        CHECK(rec.m >= n);
        CHECK(rec.run_id == r.run_id);
        CHECK(rec.status == "ok");
        CHECK(rec.wall_time_ms == 0.0);
        CHECK(std::isfinite(rec.cond));
        CHECK(rec.seed == mix_seed(mix_seed(42, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(t)));
      }
    }
  }
  CHECK(r.cells.size() == 6);
  for (const auto& c : r.cells) {
    CHECK(c.trials == 6);
    CHECK(c.cond_q10 <= c.cond_median);
    CHECK(c.cond_median <= c.cond_q90);
  }
  // commas never leak into fields
  for (const auto& row : rows_of(r)) CHECK(std::count(row.begin(), row.end(), ',') == 16);
}

TEST_CASE("runs are deterministic and thread-count independent") {
  auto cfg = small_config();
  const auto a = rows_of(run_experiment(cfg));
  CHECK(rows_of(run_experiment(cfg)) == a);
  cfg.threads = 3;
  std::vector<std::string> streamed;
  const auto par = run_experiment(cfg, [&](const TrialRecord& t) { streamed.push_back(to_csv_row(t)); });
  CHECK(rows_of(par) == a);
  CHECK(streamed == a);
  auto other = small_config();
  other.seed = 43;
  CHECK(rows_of(run_experiment(other)) != a);
}

TEST_CASE("run ids") {
  auto a = small_config();
  auto b = a;
  b.threads = 4;
  b.output = "elsewhere.csv";
  CHECK(run_id(a) == run_id(b));
  b.seed = 1;
  CHECK(run_id(a) != run_id(b));
  CHECK(run_id(a).size() == 16);
}

TEST_CASE("files: byte-identical reruns, append after a matching header") {
  auto cfg = small_config();
  cfg.trials = 1;
  const auto p1 = scratch("a.csv");
  const auto p2 = scratch("b.csv");
  cfg.output = p1.string();
  run_experiment_to_files(cfg);
  cfg.output = p2.string();
  run_experiment_to_files(cfg);
  const auto text = slurp(p1);
  CHECK(text == slurp(p2));
  CHECK(slurp(p1.string() + ".summary.csv") == slurp(p2.string() + ".summary.csv"));
  CHECK(text.rfind(trial_csv_header() + "\n", 0) == 0);
  CHECK(slurp(p1.string() + ".summary.csv").rfind(summary_csv_header() + "\n", 0) == 0);

  cfg.output = p1.string();
  run_experiment_to_files(cfg);
  const auto twice = slurp(p1);
  CHECK(twice == text + text.substr(trial_csv_header().size() + 1));

  const auto p3 = scratch("c.csv");
  std::ofstream(p3) << "some,other,header\n";
  cfg.output = p3.string();
  CHECK_THROWS(run_experiment_to_files(cfg));
}

TEST_CASE("in-span targets are recovered") {
  auto cfg = ExperimentConfig::from_json(R"({
    "family": "jacobi:2:0", "dim": 2, "index_set": "td", "strategies": ["mc", "mixture", "per-basis", "discrete"],
    "n_values": [6, 15], "m_rule": "linear:6", "trials": 3, "target": "in_span", "seed": 3
  })");
  const auto r = run_experiment(cfg);
  for (const auto& t : r.records) {
    INFO(to_csv_row(t));
    CHECK(t.l2_error <= 1e-9);
    CHECK(t.best_approx_l2 <= 1e-12);
  }
}

TEST_CASE("builtin targets") {
  const OrthoBasis b(TensorMeasure(MeasureFamily1D::uniform(), 2), build_index_set(IndexKind::TotalDegree, 2, 3));
  const Eigen::Vector2d x(0.2, -0.4);
  CHECK(builtin_target("runge", b, 0).f(x) == doctest::Approx(1.0 / (1 + 25 * 0.04) / (1 + 25 * 0.16)));
  CHECK(builtin_target("exp_sum", b, 0).f(x) == doctest::Approx(std::exp(-0.1)));
  CHECK(builtin_target("abs_power", b, 0).f(x) == doctest::Approx(std::pow(0.2, 3.5)));
  const auto t = builtin_target("in_span", b, 9);
  REQUIRE(t.coefficients);
  CHECK(t.coefficients->norm() == doctest::Approx(1.0));
  CHECK(t.f(x) == doctest::Approx(b.evaluate(*t.coefficients, x.transpose())(0)));
  CHECK(*builtin_target("in_span", b, 9).coefficients == *t.coefficients);
  CHECK_THROWS(builtin_target("sine", b, 0));
  CHECK(error_quadrature_points(b) >= 4);
}

TEST_CASE("Runge errors fall at the Bernstein-ellipse rate under Christoffel sampling") {
  // poles at +-i/5: best approximation decays like r^-n with r = 1/5 + sqrt(1 + 1/25)
  const double r_ellipse = 0.2 + std::sqrt(1.04);
  const double rate = std::pow(r_ellipse, 30);
  const auto r = run_experiment(ExperimentConfig::from_json(R"({
    "family": "uniform", "dim": 1, "index_set": "td", "strategies": ["mixture"],
    "n_values": [10, 40], "m_rule": "chernoff:0.5:0.1", "trials": 5, "target": "runge", "seed": 1,
    "assertions": [{"type": "decay_factor_ge", "metric": "l2_error", "value": 250}]
  })"));
  REQUIRE(r.cells.size() == 2);
  const double observed = r.cells[0].l2_median / r.cells[1].l2_median;
  const double best = r.cells[0].best_approx_l2 / r.cells[1].best_approx_l2;
  INFO("observed " << observed << " best " << best << " ellipse " << rate);
  CHECK(best == doctest::Approx(rate).epsilon(0.3));
  CHECK(observed >= 0.5 * best);
  REQUIRE(r.assertions.size() == 1);
  CHECK(r.assertions[0].passed);
}

TEST_CASE("abs_power decay rate tracks the best-approximation rate") {
  const auto r = run_experiment(ExperimentConfig::from_json(R"({
    "family": "uniform", "dim": 1, "index_set": "td", "strategies": ["mixture"],
    "n_values": [6, 12, 24, 48], "m_rule": "chernoff:0.5:0.1", "trials": 5, "target": "abs_power", "seed": 2
  })"));
  std::vector<double> ln, le, lb;
  for (const auto& c : r.cells) {
    ln.push_back(std::log(static_cast<double>(c.n)));
    le.push_back(std::log(c.l2_median));
    lb.push_back(std::log(c.best_approx_l2));
  }
  const double observed = slope(ln, le), oracle_rate = slope(ln, lb);
  INFO("observed " << observed << " oracle " << oracle_rate);
  CHECK(std::abs(observed - oracle_rate) <= 0.5);
  CHECK(oracle_rate < -2.0);
}

TEST_CASE("assertions evaluate against the cells") {
  auto cfg = ExperimentConfig::from_json(R"({
    "family": "uniform", "n_values": [10, 20], "strategies": ["mc", "mixture"],
    "m_rule": "linear:3", "trials": 40, "seed": 5,
    "assertions": [
      {"name": "mixture beats mc", "type": "median_less", "strategy": "mixture", "other": "mc"},
      {"name": "mc beats mixture", "type": "median_less", "strategy": "mc", "other": "mixture"},
      {"name": "tiny cond", "type": "max_le", "metric": "cond", "value": 1.0},
      {"name": "increasing", "type": "median_increasing", "strategy": "mc"},
      {"name": "failure rate", "type": "failure_rate_le", "strategy": "mixture", "value": 1.0}
    ]
  })");
  const auto r = run_experiment(cfg);
  std::map<std::string, bool> passed;
  for (const auto& a : r.assertions) passed[a.name] = a.passed;
  CHECK(passed.at("mixture beats mc"));
  CHECK_FALSE(passed.at("mc beats mixture"));
  CHECK_FALSE(passed.at("tiny cond"));
  CHECK(passed.at("failure rate"));
  CHECK(passed.count("increasing") == 1);
  CHECK_FALSE(r.all_passed());
}

TEST_CASE("failures are censored rows, not aborted sweeps") {
  // Monte Carlo kappa is infinite on the real line, so a Chernoff count does not exist
  const auto r = run_experiment(ExperimentConfig::from_json(R"({
    "family": "gaussian", "n_values": [4], "strategies": ["mc", "mixture"],
    "m_rule": "chernoff:0.5:0.1", "trials": 3, "seed": 1
  })"));
  REQUIRE(r.records.size() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(r.records[i].censored());
    CHECK(std::isinf(r.records[i].cond));
    CHECK(std::isnan(r.records[i].l2_error));
  }
  for (int i = 3; i < 6; ++i) CHECK_FALSE(r.records[i].censored());
  CHECK(r.cells[0].censored == 3);
  CHECK(r.cells[0].stability_failures == 3);

  auto slow = small_config();
  slow.cell_budget_seconds = 1e-9;
  const auto b = run_experiment(slow);
  int budget = 0;
  for (const auto& t : b.records) budget += t.status == "censored:budget";
  CHECK(budget > 0);
  CHECK(b.records.size() == 36);
}

TEST_CASE("redraw estimator in a sweep") {
  const auto r = run_experiment(ExperimentConfig::from_json(R"({
    "family": "uniform", "n_values": [6], "strategies": ["mixture"], "m_rule": "linear:3",
    "trials": 20, "seed": 8, "estimator": "redraw:0.5:1000"
  })"));
  double redraws = 0;
  for (const auto& t : r.records) {
    CHECK(t.gram_deviation <= 0.5);
    redraws += t.redraw_count;
  }
  CHECK(r.cells[0].redraw_mean == doctest::Approx(redraws / 20));
}

TEST_CASE("kappa comparison table") {
  KappaCompareConfig c;
  c.families = {"chebyshev1"};
  c.kinds = {IndexKind::TotalDegree};
  c.dim = 1;
  c.n_values = {3, 10, 25};
  for (const auto& row : compare_kappa(c)) CHECK(row.kappa == doctest::Approx(2.0 * row.n - 1).epsilon(1e-12));

  c.families = {"uniform", "chebyshev1", "gaussian", "jacobi:0.3:0.1"};
  c.kinds = {IndexKind::HyperbolicCross, IndexKind::TotalDegree};
  c.dim = 2;
  c.n_values = {10, 50, 100};
  const auto rows = compare_kappa(c);
  CHECK(rows.size() == 24);
  for (const auto& row : rows) {
    INFO(to_csv_row(row));
    if (row.family == "gaussian") {
      CHECK(row.status == "censored:unbounded");
    } else if (row.family == "jacobi:0.3:0.1") {
      CHECK(row.status == "no-bound");
    } else {
      CHECK(row.status == "ok");
      CHECK(row.ratio <= 1 + 1e-6);
    }
  }
  CHECK(kappa_reference_bound(MeasureFamily1D::uniform(), 10)->second == doctest::Approx(100.0));
  CHECK(kappa_reference_bound(MeasureFamily1D::jacobi(2, 0), 10)->second == doctest::Approx(1e6));
  CHECK(kappa_reference_bound(MeasureFamily1D::chebyshev_second(), 10)->second == doctest::Approx(std::pow(10, 3.0)));
  CHECK_FALSE(kappa_reference_bound(MeasureFamily1D::exponential(), 10));
  const auto header = kappa_csv_header();
  const auto line = to_csv_row(rows[0]);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(line.begin(), line.end(), ','));
}
