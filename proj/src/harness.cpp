#include "wls/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <queue>
#include <sstream>
#include <thread>

namespace wls {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string hex64(std::uint64_t v) {
  char buf[17];
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i, v >>= 4) buf[i] = digits[v & 0xF];
  buf[16] = '\0';
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Keeps a reason usable as a single CSV field.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  if (s.size() > 160) s.resize(160);
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- m rules

Eigen::Index MRule::operator()(Eigen::Index n, double kappa_w) const {
  const double nn = static_cast<double>(n);
  switch (kind) {
    case Kind::Fixed:
      return static_cast<Eigen::Index>(value);
    case Kind::Linear:
      return static_cast<Eigen::Index>(std::ceil(value * nn));
    case Kind::LogLinear:
      return static_cast<Eigen::Index>(std::ceil(value * nn * std::log(nn)));
    case Kind::Chernoff:
      return chernoff_sample_count(kappa_w, n, delta, epsilon, log_multiplier);
  }
  return 0;
}

std::string MRule::name() const {
  switch (kind) {
    case Kind::Fixed: return "fixed:" + format_double(value);
    case Kind::Linear: return "linear:" + format_double(value);
    case Kind::LogLinear: return "loglinear:" + format_double(value);
    case Kind::Chernoff:
      return "chernoff:" + format_double(delta) + ":" + format_double(epsilon) + ":" +
             format_double(log_multiplier);
  }
  return "?";
}

StrategyChoice StrategyChoice::parse(std::string_view s, const WeightSpec& default_weight) {
  StrategyChoice c;
  const auto slash = s.find('/');
  c.strategy = parse_strategy(s.substr(0, slash));
  if (slash != std::string_view::npos) {
    c.weight = WeightSpec::parse(s.substr(slash + 1));
  } else {
    c.weight = c.strategy == Strategy::MonteCarlo ? WeightSpec::monte_carlo() : default_weight;
  }
  if (c.strategy == Strategy::MonteCarlo && c.weight.kind != WeightKind::MonteCarlo) {
    throw std::invalid_argument("mc strategy draws from rho and takes w = 1 only");
  }
  c.label = std::string(s);
  return c;
}

// ---------------------------------------------------------------- config

namespace {

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

MRule parse_m_rule(const json& j) {
  MRule r;
  if (j.is_string()) {
    // "linear:3", "fixed:200", "loglinear:2", "chernoff:0.5:0.1"
    const auto s = j.get<std::string>();
    std::vector<double> args;
    std::string head = s.substr(0, s.find(':'));
    std::size_t pos = s.find(':');
    while (pos != std::string::npos) {
      const auto next = s.find(':', pos + 1);
      try {
        args.push_back(std::stod(s.substr(pos + 1, next - pos - 1)));
      } catch (const std::exception&) {
        throw ConfigError("m_rule: bad number in '" + s + "'");
      }
      pos = next;
    }
    json o{{"type", head}};
    if (head == "fixed" && args.size() == 1) o["m"] = args[0];
    else if ((head == "linear" || head == "loglinear") && args.size() == 1) o["c"] = args[0];
    else if (head == "chernoff" && args.size() >= 2 && args.size() <= 3) {
      o["delta"] = args[0];
      o["epsilon"] = args[1];
      if (args.size() == 3) o["log_multiplier"] = args[2];
    } else {
      throw ConfigError("m_rule: cannot parse '" + s + "'");
    }
    return parse_m_rule(o);
  }
  if (!j.is_object()) throw ConfigError("m_rule must be a string or an object");
  const auto type = get<std::string>(j, "type", "");
  if (type == "fixed") {
    r.kind = MRule::Kind::Fixed;
    if (!j.contains("m")) throw ConfigError("m_rule fixed needs 'm'");
    r.value = get<double>(j, "m", 0.0);
  } else if (type == "linear" || type == "loglinear") {
    r.kind = type == "linear" ? MRule::Kind::Linear : MRule::Kind::LogLinear;
    if (!j.contains("c")) throw ConfigError("m_rule " + type + " needs 'c'");
    r.value = get<double>(j, "c", 0.0);
  } else if (type == "chernoff") {
    r.kind = MRule::Kind::Chernoff;
    r.delta = get<double>(j, "delta", 0.5);
    r.epsilon = get<double>(j, "epsilon", 0.1);
    r.log_multiplier = get<double>(j, "log_multiplier", 2.0);
  } else {
    throw ConfigError("m_rule type must be fixed, linear, loglinear or chernoff");
  }
  return r;
}

const std::vector<std::string> kConfigKeys = {
    "family",  "dim",         "index_set",      "strategies",          "weight",
    "n_values", "m_rule",     "trials",         "noise_level",         "seed",
    "target",  "estimator",   "output",         "summary_output",      "threads",
    "cell_budget_seconds",    "record_timing",  "stability_delta",     "assertions"};

}  // namespace

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  ExperimentConfig c;
  try {
    c.family = get<std::string>(j, "family", c.family);
    c.dim = get<int>(j, "dim", c.dim);
    c.index_set = get<std::string>(j, "index_set", c.index_set);
    const auto default_weight = WeightSpec::parse(get<std::string>(j, "weight", "opt"));
    for (const auto& s : get<std::vector<std::string>>(j, "strategies", {"mc", "mixture"})) {
      c.strategies.push_back(StrategyChoice::parse(s, default_weight));
    }
    for (auto n : get<std::vector<long long>>(j, "n_values", {})) c.n_values.push_back(n);
    if (j.contains("m_rule")) c.m_rule = parse_m_rule(j.at("m_rule"));
    c.trials = get<int>(j, "trials", c.trials);
    c.noise_level = get<double>(j, "noise_level", c.noise_level);
    c.seed = get<std::uint64_t>(j, "seed", c.seed);
    c.target = get<std::string>(j, "target", c.target);
    c.estimator = parse_estimator(get<std::string>(j, "estimator", "plain"));
    c.output = get<std::string>(j, "output", c.output);
    c.summary_output = get<std::string>(j, "summary_output", c.summary_output);
    c.threads = get<int>(j, "threads", c.threads);
    c.cell_budget_seconds = get<double>(j, "cell_budget_seconds", c.cell_budget_seconds);
    c.record_timing = get<bool>(j, "record_timing", c.record_timing);
    c.stability_delta = get<double>(j, "stability_delta", c.stability_delta);
    if (j.contains("assertions")) {
      if (!j.at("assertions").is_array()) throw ConfigError("assertions must be an array");
      for (const auto& a : j.at("assertions")) {
        Assertion as;
        as.type = get<std::string>(a, "type", "");
        as.name = get<std::string>(a, "name", as.type);
        as.metric = get<std::string>(a, "metric", as.metric);
        as.strategy = get<std::string>(a, "strategy", "");
        as.other = get<std::string>(a, "other", "");
        as.value = get<double>(a, "value", 0.0);
        c.assertions.push_back(std::move(as));
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  try {
    (void)TensorMeasure::parse(family, dim);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("family: ") + e.what());
  }
  const bool fixed_set = index_set.find(':') != std::string::npos;
  try {
    if (fixed_set) (void)IndexSetSpec::parse(index_set);
    else (void)parse_index_kind(index_set);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("index_set: ") + e.what());
  }
  if (!fixed_set && n_values.empty()) throw ConfigError("n_values must be nonempty");
  for (auto n : n_values)
    if (n < 1) throw ConfigError("n_values must be >= 1");
  if (strategies.empty()) throw ConfigError("strategies must be nonempty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(noise_level >= 0.0)) throw ConfigError("noise_level must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (!(cell_budget_seconds >= 0.0)) throw ConfigError("cell_budget_seconds must be >= 0");
  if (!(stability_delta > 0.0 && stability_delta < 1.0)) {
    throw ConfigError("stability_delta must lie in (0,1)");
  }
  static const std::vector<std::string> targets = {"runge", "exp_sum", "abs_power", "in_span"};
  if (std::find(targets.begin(), targets.end(), target) == targets.end()) {
    throw ConfigError("unknown target '" + target + "'");
  }
  switch (m_rule.kind) {
    case MRule::Kind::Fixed:
    case MRule::Kind::Linear:
    case MRule::Kind::LogLinear:
      if (!(m_rule.value > 0.0)) throw ConfigError("m_rule needs a positive parameter");
      for (auto n : n_values) {
        if (m_rule(n, 0.0) < n) {
          throw ConfigError("m_rule " + m_rule.name() + " gives m < n at n = " + std::to_string(n));
        }
      }
      break;
    case MRule::Kind::Chernoff:
      if (!(m_rule.delta > 0.0 && m_rule.delta < 1.0) ||
          !(m_rule.epsilon > 0.0 && m_rule.epsilon < 1.0) || !(m_rule.log_multiplier > 0.0)) {
        throw ConfigError("m_rule chernoff needs delta, epsilon in (0,1)");
      }
      break;
  }
  static const std::vector<std::string> types = {"median_less",       "median_le",
                                                 "median_increasing", "max_le",
                                                 "failure_rate_le",   "decay_factor_ge"};
  static const std::vector<std::string> metrics = {"cond", "gram_deviation", "l2_error",
                                                   "linf_error", "redraw_count"};
  for (const auto& a : assertions) {
    if (std::find(types.begin(), types.end(), a.type) == types.end()) {
      throw ConfigError("unknown assertion type '" + a.type + "'");
    }
    if (std::find(metrics.begin(), metrics.end(), a.metric) == metrics.end()) {
      throw ConfigError("unknown assertion metric '" + a.metric + "'");
    }
    if (a.type == "median_less" && (a.strategy.empty() || a.other.empty())) {
      throw ConfigError("median_less needs 'strategy' and 'other'");
    }
  }
}

std::string run_id(const ExperimentConfig& cfg) {
  json j;
  j["family"] = cfg.family;
  j["dim"] = cfg.dim;
  j["index_set"] = cfg.index_set;
  std::vector<std::string> strategies;
  for (const auto& s : cfg.strategies) strategies.push_back(s.label + "=" + s.weight.name());
  j["strategies"] = strategies;
  j["n_values"] = cfg.n_values;
  j["m_rule"] = cfg.m_rule.name();
  j["trials"] = cfg.trials;
  j["noise_level"] = format_double(cfg.noise_level);
  j["seed"] = cfg.seed;
  j["target"] = cfg.target;
  j["estimator"] = estimator_name(cfg.estimator);
  return hex64(fnv1a(j.dump()));
}

// ---------------------------------------------------------------- CSV

std::string trial_csv_header() {
  return "run_id,trial,n,m,strategy,alpha_w,beta_w,cond,gram_deviation,l2_error,linf_error,"
         "best_approx_l2,noise_level,redraw_count,seed,wall_time_ms,status";
}

std::string to_csv_row(const TrialRecord& r) {
  std::string s;
  s.reserve(256);
  s += r.run_id;
  s += ',' + std::to_string(r.trial);
  s += ',' + std::to_string(r.n);
  s += ',' + std::to_string(r.m);
  s += ',' + r.strategy;
  for (double v : {r.alpha_w, r.beta_w, r.cond, r.gram_deviation, r.l2_error, r.linf_error,
                   r.best_approx_l2, r.noise_level}) {
    s += ',' + format_double(v);
  }
  s += ',' + std::to_string(r.redraw_count);
  s += ',' + std::to_string(r.seed);
  s += ',' + format_double(r.wall_time_ms);
  s += ',' + r.status;
  return s;
}

std::string summary_csv_header() {
  return "n,strategy,m,trials,censored,stability_failures,cond_median,cond_q10,cond_q90,"
         "gram_median,gram_q10,gram_q90,l2_median,l2_q10,l2_q90,linf_median,best_approx_l2,"
         "redraw_mean";
}

std::string to_csv_row(const CellSummary& c) {
  std::string s = std::to_string(c.n) + ',' + c.strategy + ',' + std::to_string(c.m) + ',' +
                  std::to_string(c.trials) + ',' + std::to_string(c.censored) + ',' +
                  std::to_string(c.stability_failures);
  for (double v : {c.cond_median, c.cond_q10, c.cond_q90, c.gram_median, c.gram_q10, c.gram_q90,
                   c.l2_median, c.l2_q10, c.l2_q90, c.linf_median, c.best_approx_l2,
                   c.redraw_mean}) {
    s += ',' + format_double(v);
  }
  return s;
}

double quantile(std::vector<double> values, double p) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  if (lo == hi || values[lo] == values[hi]) return values[lo];
  if (std::isinf(values[hi])) return h == static_cast<double>(lo) ? values[lo] : values[hi];
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

bool ExperimentResult::all_passed() const noexcept {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const AssertionOutcome& a) { return a.passed; });
}

// ---------------------------------------------------------------- targets

Target builtin_target(std::string_view name, const OrthoBasis& basis, std::uint64_t seed) {
  const int d = basis.dim();
  Target t;
  if (name == "runge") {
    t.f = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
      return (1.0 / (1.0 + 25.0 * x.array().square())).prod();
    };
  } else if (name == "exp_sum") {
    t.f = [d](const Eigen::Ref<const Eigen::VectorXd>& x) { return std::exp(x.sum() / d); };
  } else if (name == "abs_power") {
    t.f = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return std::pow(std::abs(x(0)), 3.5); };
  } else if (name == "in_span") {
    Rng rng(seed);
    Eigen::VectorXd c(basis.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = rng.normal();
    c /= c.norm();
    auto shared = std::make_shared<const OrthoBasis>(basis);
    t.f = [shared, c](const Eigen::Ref<const Eigen::VectorXd>& x) {
      return shared->eval_row(x).dot(c);
    };
    t.coefficients = c;
  } else {
    throw std::invalid_argument("unknown target '" + std::string(name) + "'");
  }
  return t;
}

int error_quadrature_points(const OrthoBasis& basis) {
  const int p = basis.index_set().max_degree();
  const int d = basis.dim();
  const int exact = p + 1;
  const int wanted = std::max(4 * (p + 1), 64);
  // keep the (q^d x n) evaluation matrix around 5e6 entries
  const double budget = 5e6 / static_cast<double>(basis.size());
  const int affordable = static_cast<int>(std::floor(std::pow(budget, 1.0 / d)));
  return std::max(exact, std::min(wanted, affordable));
}

// ---------------------------------------------------------------- sweep

namespace {

/// Hands completed rows to the sink in sequence order from one thread.
class OrderedWriter {
 public:
  explicit OrderedWriter(std::function<void(const TrialRecord&)> sink)
      : sink_(std::move(sink)), worker_([this] { loop(); }) {}

  ~OrderedWriter() { close(); }

  void push(std::size_t seq, TrialRecord r) {
    {
      std::lock_guard lock(mu_);
      queue_.emplace(seq, std::move(r));
    }
    cv_.notify_one();
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
      closed_ = true;
    }
    cv_.notify_one();
    worker_.join();
  }

 private:
  void loop() {
    std::map<std::size_t, TrialRecord> pending;
    std::size_t next = 0;
    std::unique_lock lock(mu_);
    while (true) {
      cv_.wait(lock, [this] { return closed_ || !queue_.empty(); });
      while (!queue_.empty()) {
        pending.insert(std::move(queue_.front()));
        queue_.pop();
      }
      const bool done = closed_;
      lock.unlock();
      for (auto it = pending.begin(); it != pending.end() && it->first == next;
           it = pending.erase(it), ++next) {
        if (sink_) sink_(it->second);
      }
      if (done) {
        // rows left here had a gap before them; emit in order anyway
        for (const auto& [seq, r] : pending)
          if (sink_) sink_(r);
        return;
      }
      lock.lock();
    }
  }

  std::function<void(const TrialRecord&)> sink_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::queue<std::pair<std::size_t, TrialRecord>> queue_;
  bool closed_ = false;
  std::thread worker_;
};

TrialRecord censored_row(TrialRecord r, const std::string& reason) {
  r.alpha_w = r.beta_w = r.gram_deviation = kNaN;
  r.l2_error = r.linf_error = kNaN;
  r.cond = kInf;
  r.status = "censored:" + sanitize(reason);
  return r;
}

struct Cell {
  const OrthoBasis* basis;
  const Target* target;
  const ErrorOracle* oracle;
  const StrategyChoice* strategy;
  Eigen::Index m;
  std::string censor_reason;  ///< nonempty: every trial is censored
};

TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, const std::string& rid,
                      int trial, std::chrono::steady_clock::time_point cell_start) {
  const auto& basis = *cell.basis;
  const auto n = basis.size();
  TrialRecord r;
  r.run_id = rid;
  r.trial = trial;
  r.n = n;
  r.m = cell.m;
  r.strategy = cell.strategy->label;
  r.noise_level = cfg.noise_level;
  r.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(n)),
                    static_cast<std::uint64_t>(trial));
  r.best_approx_l2 = cell.oracle ? cell.oracle->best_approx_l2() : kNaN;
  if (!cell.censor_reason.empty()) return censored_row(r, cell.censor_reason);
  if (cfg.cell_budget_seconds > 0.0) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - cell_start;
    if (elapsed.count() > cfg.cell_budget_seconds) return censored_row(r, "budget");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto draw = [&](int attempt) {
    const auto a = static_cast<std::uint64_t>(attempt);
    auto plan = draw_plan(basis, cell.strategy->strategy, cell.strategy->weight, cell.m,
                          mix_seed(r.seed, 1 + 2 * a));
    NoisySamples y;
    y.values.resize(plan.size());
    for (Eigen::Index i = 0; i < plan.size(); ++i) {
      y.values(i) = cell.target->f(plan.points.row(i).transpose());
    }
    if (cfg.noise_level > 0.0) {
      y.values += gaussian_noise(plan.size(), cfg.noise_level, mix_seed(r.seed, 2 + 2 * a));
    }
    return std::pair{std::move(plan), std::move(y)};
  };

  try {
    FitResult fr;
    if (const auto* rd = std::get_if<estimator::Redraw>(&cfg.estimator)) {
      fr = fit_redraw(basis, draw, *rd);
    } else {
      auto [plan, y] = draw(0);
      fr = fit(basis, plan, y, cfg.estimator);
    }
    r.alpha_w = fr.alpha_w;
    r.beta_w = fr.beta_w;
    r.cond = fr.cond;
    r.gram_deviation = fr.gram_deviation;
    r.redraw_count = fr.redraw_count;
    r.l2_error = cell.oracle->l2_error(fr.coefficients);
    r.linf_error = cell.oracle->linf_error(fr.coefficients);
  } catch (const RedrawExhausted& e) {
    r.redraw_count = std::get<estimator::Redraw>(cfg.estimator).max_tries;
    r = censored_row(r, "redraw-exhausted");
  } catch (const std::exception& e) {
    r = censored_row(r, e.what());
  }
  if (cfg.record_timing) {
    r.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return r;
}

double metric_of(const TrialRecord& r, const std::string& metric) {
  if (metric == "cond") return r.cond;
  if (metric == "gram_deviation") return r.gram_deviation;
  if (metric == "l2_error") return r.l2_error;
  if (metric == "linf_error") return r.linf_error;
  if (metric == "redraw_count") return r.redraw_count;
  return kNaN;
}

CellSummary summarize(const std::vector<TrialRecord>& rows, double delta) {
  CellSummary c;
  c.n = rows.front().n;
  c.strategy = rows.front().strategy;
  c.m = rows.front().m;
  c.trials = static_cast<int>(rows.size());
  c.best_approx_l2 = rows.front().best_approx_l2;
  std::vector<double> cond, gram, l2, linf;
  double redraws = 0.0;
  for (const auto& r : rows) {
    cond.push_back(r.cond);
    gram.push_back(r.gram_deviation);
    l2.push_back(r.l2_error);
    linf.push_back(r.linf_error);
    redraws += r.redraw_count;
    if (r.censored()) {
      ++c.censored;
      ++c.stability_failures;
    } else if (r.alpha_w * r.alpha_w <= 1.0 - delta || r.beta_w * r.beta_w >= 1.0 + delta) {
      ++c.stability_failures;
    }
  }
  c.cond_median = quantile(cond, 0.5);
  c.cond_q10 = quantile(cond, 0.1);
  c.cond_q90 = quantile(cond, 0.9);
  c.gram_median = quantile(gram, 0.5);
  c.gram_q10 = quantile(gram, 0.1);
  c.gram_q90 = quantile(gram, 0.9);
  c.l2_median = quantile(l2, 0.5);
  c.l2_q10 = quantile(l2, 0.1);
  c.l2_q90 = quantile(l2, 0.9);
  c.linf_median = quantile(linf, 0.5);
  c.redraw_mean = redraws / static_cast<double>(rows.size());
  return c;
}

double cell_median(const ExperimentResult& res, const CellSummary& c, const std::string& metric) {
  if (metric == "cond") return c.cond_median;
  if (metric == "gram_deviation") return c.gram_median;
  if (metric == "l2_error") return c.l2_median;
  if (metric == "linf_error") return c.linf_median;
  std::vector<double> v;
  for (const auto& r : res.records)
    if (r.n == c.n && r.strategy == c.strategy) v.push_back(metric_of(r, metric));
  return quantile(v, 0.5);
}

AssertionOutcome evaluate(const Assertion& a, const ExperimentResult& res) {
  AssertionOutcome out;
  out.name = a.name.empty() ? a.type : a.name;
  out.passed = true;
  std::ostringstream detail;
  const auto matches = [&](const std::string& label) {
    return a.strategy.empty() || label == a.strategy;
  };

  if (a.type == "median_less") {
    for (const auto& c : res.cells) {
      if (c.strategy != a.strategy) continue;
      auto other = std::find_if(res.cells.begin(), res.cells.end(), [&](const CellSummary& o) {
        return o.n == c.n && o.strategy == a.other;
      });
      if (other == res.cells.end()) {
        out.passed = false;
        detail << " n=" << c.n << ": no '" << a.other << "' cell;";
        continue;
      }
      const double lhs = cell_median(res, c, a.metric);
      const double rhs = cell_median(res, *other, a.metric);
      detail << " n=" << c.n << ": " << format_double(lhs) << " vs " << format_double(rhs) << ";";
      if (!(lhs < rhs)) out.passed = false;
    }
  } else if (a.type == "median_le") {
    for (const auto& c : res.cells) {
      if (!matches(c.strategy)) continue;
      const double v = cell_median(res, c, a.metric);
      detail << " n=" << c.n << " " << c.strategy << ": " << format_double(v) << ";";
      if (!(v <= a.value)) out.passed = false;
    }
  } else if (a.type == "median_increasing" || a.type == "decay_factor_ge") {
    std::map<std::string, std::vector<std::pair<Eigen::Index, double>>> series;
    for (const auto& c : res.cells)
      if (matches(c.strategy)) series[c.strategy].emplace_back(c.n, cell_median(res, c, a.metric));
    for (auto& [label, s] : series) {
      std::sort(s.begin(), s.end());
      detail << " " << label << ":";
      for (const auto& [n, v] : s) detail << " " << format_double(v);
      detail << ";";
      if (a.type == "median_increasing") {
        for (std::size_t i = 1; i < s.size(); ++i)
          if (!(s[i].second > s[i - 1].second)) out.passed = false;
      } else if (!(s.front().second / s.back().second >= a.value)) {
        out.passed = false;
      }
    }
  } else if (a.type == "max_le") {
    double worst = -kInf;
    for (const auto& r : res.records) {
      if (!matches(r.strategy)) continue;
      const double v = metric_of(r, a.metric);
      if (std::isnan(v) || !(v <= a.value)) out.passed = false;
      if (!std::isnan(v)) worst = std::max(worst, v);
    }
    detail << " max " << format_double(worst);
  } else if (a.type == "failure_rate_le") {
    for (const auto& c : res.cells) {
      if (!matches(c.strategy)) continue;
      const double rate = static_cast<double>(c.stability_failures) / c.trials;
      detail << " n=" << c.n << " " << c.strategy << ": " << format_double(rate) << ";";
      if (!(rate <= a.value)) out.passed = false;
    }
  }
  out.detail = detail.str();
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const TrialRecord&)>& sink) {
  cfg.validate();
  ExperimentResult res;
  res.run_id = run_id(cfg);
  const auto measure = TensorMeasure::parse(cfg.family, cfg.dim);
  const bool fixed_set = cfg.index_set.find(':') != std::string::npos;

  std::vector<IndexSet> sets;
  if (fixed_set) {
    sets.push_back(build_index_set(IndexSetSpec::parse(cfg.index_set), cfg.dim));
  } else {
    const auto kind = parse_index_kind(cfg.index_set);
    for (auto n : cfg.n_values) sets.push_back(lower_set_of_size(kind, cfg.dim, n));
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned threads = cfg.threads == 0 ? hw : static_cast<unsigned>(cfg.threads);

  std::mutex rec_mu;
  OrderedWriter writer([&](const TrialRecord& r) {
    if (sink) sink(r);
  });
  std::size_t seq_base = 0;

  for (const auto& set : sets) {
    const OrthoBasis basis(measure, set);
    const auto n = basis.size();
    const auto target = builtin_target(cfg.target, basis, mix_seed(cfg.seed ^ 0x7a49e7ULL, n));
    const ErrorOracle oracle(basis, target.f, error_quadrature_points(basis));

    for (const auto& strat : cfg.strategies) {
      Cell cell{&basis, &target, &oracle, &strat, 0, {}};
      try {
        double kappa = 0.0;
        if (cfg.m_rule.kind == MRule::Kind::Chernoff) {
          const auto k = kappa_w(basis, strat.weight);
          if (k.infinite) throw DomainError("kappa_w is infinite");
          kappa = k.value;
        }
        cell.m = cfg.m_rule(n, kappa);
        if (cell.m < n) throw DomainError("m < n");
        if (strat.strategy == Strategy::PerBasisInduced) cell.m = (cell.m + n - 1) / n * n;
      } catch (const std::exception& e) {
        cell.censor_reason = e.what();
      }

      std::vector<TrialRecord> rows(static_cast<std::size_t>(cfg.trials));
      std::atomic<int> next{0};
      const auto cell_start = std::chrono::steady_clock::now();
      const auto work = [&] {
        for (int t = next++; t < cfg.trials; t = next++) {
          auto r = run_trial(cfg, cell, res.run_id, t, cell_start);
          writer.push(seq_base + static_cast<std::size_t>(t), r);
          std::lock_guard lock(rec_mu);
          rows[static_cast<std::size_t>(t)] = std::move(r);
        }
      };
      const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(cfg.trials));
      if (workers <= 1) {
        work();
      } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      }
      seq_base += rows.size();
      res.cells.push_back(summarize(rows, cfg.stability_delta));
      for (auto& r : rows) res.records.push_back(std::move(r));
    }
  }
  writer.close();
  for (const auto& a : cfg.assertions) res.assertions.push_back(evaluate(a, res));
  return res;
}

ExperimentResult run_experiment_to_files(const ExperimentConfig& cfg) {
  if (cfg.output.empty()) throw ConfigError("output path is empty");
  namespace fs = std::filesystem;
  const bool append = fs::exists(cfg.output) && fs::file_size(cfg.output) > 0;
  if (append) {
    std::ifstream in(cfg.output);
    std::string header;
    std::getline(in, header);
    if (header != trial_csv_header()) {
      throw ConfigError("existing file '" + cfg.output + "' has a different header");
    }
  }
  std::ofstream out(cfg.output, append ? std::ios::app : std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + cfg.output + "'");
  if (!append) out << trial_csv_header() << '\n';
  auto res = run_experiment(cfg, [&](const TrialRecord& r) {
    out << to_csv_row(r) << '\n';
    out.flush();
  });

  const auto summary_path = cfg.summary_output.empty() ? cfg.output + ".summary.csv"
                                                       : cfg.summary_output;
  std::ofstream sum(summary_path, std::ios::trunc);
  if (!sum) throw ConfigError("cannot write '" + summary_path + "'");
  sum << summary_csv_header() << '\n';
  for (const auto& c : res.cells) sum << to_csv_row(c) << '\n';
  return res;
}

// ---------------------------------------------------------------- kappa table

std::optional<std::pair<std::string, double>> kappa_reference_bound(const MeasureFamily1D& fam,
                                                                    Eigen::Index n) {
  if (!fam.bounded()) return std::nullopt;
  const double nn = static_cast<double>(n);
  const double a = fam.alpha();
  const double b = fam.beta();
  if (a == -0.5 && b == -0.5) {
    const double e = std::log(3.0) / std::log(2.0);
    return std::pair{std::string("n^1.585"), std::pow(nn, e)};
  }
  const auto is_nat = [](double v) { return v >= 0.0 && v == std::floor(v); };
  double e = kNaN;
  if (is_nat(a) && is_nat(b)) e = 2.0 * std::max(a, b) + 2.0;
  else if (a == b && is_nat(2.0 * a + 1.0)) e = 2.0 * a + 2.0;
  if (std::isnan(e)) return std::nullopt;
  return std::pair{"n^" + format_double(e), std::pow(nn, e)};
}

std::vector<KappaRow> compare_kappa(const KappaCompareConfig& cfg) {
  std::vector<KappaRow> rows;
  for (const auto& fname : cfg.families) {
    const auto fam = MeasureFamily1D::parse(fname);
    for (auto kind : cfg.kinds) {
      for (auto n : cfg.n_values) {
        KappaRow r;
        r.family = fam.name();
        r.index_set = to_string(kind);
        r.dim = cfg.dim;
        r.n = n;
        r.bound = kNaN;
        r.ratio = kNaN;
        r.bound_name = "none";
        if (!fam.bounded()) {
          r.kappa = kInf;
          r.status = "censored:unbounded";
          rows.push_back(r);
          continue;
        }
        try {
          const OrthoBasis basis(TensorMeasure(fam, cfg.dim),
                                 lower_set_of_size(kind, cfg.dim, static_cast<std::size_t>(n)));
          r.kappa = kappa_w(basis, cfg.weight).value;
          if (const auto ref = kappa_reference_bound(fam, n)) {
            r.bound_name = ref->first;
            r.bound = ref->second;
            r.ratio = r.kappa / r.bound;
            r.status = r.ratio <= 1.0 + 1e-6 ? "ok" : "exceeds";
          } else {
            r.status = "no-bound";
          }
        } catch (const std::exception& e) {
          r.kappa = kNaN;
          r.status = "censored:" + sanitize(e.what());
        }
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::string kappa_csv_header() { return "family,index_set,d,n,kappa,bound_name,bound,ratio,status"; }

std::string to_csv_row(const KappaRow& r) {
  return r.family + ',' + r.index_set + ',' + std::to_string(r.dim) + ',' + std::to_string(r.n) +
         ',' + format_double(r.kappa) + ',' + r.bound_name + ',' + format_double(r.bound) + ',' +
         format_double(r.ratio) + ',' + r.status;
}

}  // namespace wls
