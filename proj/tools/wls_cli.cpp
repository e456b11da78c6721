// Command-line front end: basis, kappa, sample, fit, experiment, compare.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "wls/christoffel.hpp"
#include "wls/harness.hpp"
#include "wls/index_sets.hpp"
#include "wls/least_squares.hpp"
#include "wls/orthopoly.hpp"
#include "wls/sampling.hpp"

namespace {

struct BasisOptions {
  std::string family = "uniform";
  int dim = 1;
  std::string index_set = "td";
  std::size_t n = 10;

  void add_to(CLI::App* app) {
    app->add_option("--family", family, "Measure family, or a comma-separated list per dimension")
        ->capture_default_str();
    app->add_option("--dim", dim, "Dimension")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--index-set", index_set,
                    "Index set: a kind (tp, td, hc, hcsum) sized by --n, or a full spec "
                    "such as td:5 or hc:8:a=1,2")
        ->capture_default_str();
    app->add_option("--n", n, "Basis size when --index-set is a kind")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  wls::OrthoBasis build() const {
    auto measure = wls::TensorMeasure::parse(family, dim);
    const int d = measure.dim();
    if (index_set.find(':') != std::string::npos) {
      return {std::move(measure), wls::build_index_set(wls::IndexSetSpec::parse(index_set), d)};
    }
    return {std::move(measure), wls::lower_set_of_size(wls::parse_index_kind(index_set), d, n)};
  }
};

std::string join_row(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += wls::format_double(v(i));
  }
  return s;
}

std::string join_index(const wls::MultiIndex& nu) {
  std::string s;
  for (std::size_t k = 0; k < nu.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(nu[k]);
  }
  return s;
}

/// "0.1,0.2;0.3,0.4" -> rows of points.
Eigen::MatrixXd parse_points(const std::string& s, int d) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(s);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> r;
    std::stringstream rs(row);
    std::string v;
    while (std::getline(rs, v, ',')) r.push_back(std::stod(v));
    if (static_cast<int>(r.size()) != d) {
      throw std::invalid_argument("point '" + row + "' does not have " + std::to_string(d) +
                                  " coordinates");
    }
    rows.push_back(std::move(r));
  }
  Eigen::MatrixXd pts(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int k = 0; k < d; ++k) pts(static_cast<Eigen::Index>(i), k) = rows[i][k];
  return pts;
}

/// Default spot points: the centre of each factor's support and one point
/// off-centre.
Eigen::MatrixXd default_points(const wls::TensorMeasure& m) {
  Eigen::MatrixXd pts(2, m.dim());
  for (int k = 0; k < m.dim(); ++k) {
    const auto& f = m.factors[k];
    const double centre = f.kind() == wls::FamilyKind::Exponential ? 1.0 : 0.0;
    pts(0, k) = centre;
    pts(1, k) = centre + 0.5;
  }
  return pts;
}

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  if (path.empty() || path == "-") return nullptr;
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

void write_plan_csv(std::ostream& os, const wls::SamplePlan& plan) {
  for (int k = 0; k < plan.dim(); ++k) os << 'x' << k + 1 << ',';
  os << "weight\n";
  for (Eigen::Index i = 0; i < plan.size(); ++i) {
    os << join_row(plan.points.row(i).transpose()) << ',' << wls::format_double(plan.weights(i))
       << '\n';
  }
}

struct CsvSamples {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
  Eigen::VectorXd values;
};

/// Header x1..xd, y and an optional weight column.
CsvSamples read_samples(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string h;
    while (std::getline(hs, h, ',')) header.push_back(h);
  }
  std::vector<int> xcol(d, -1);
  int ycol = -1, wcol = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const auto& h = header[c];
    if (h == "y") ycol = c;
    else if (h == "weight") wcol = c;
    else if (h.size() > 1 && h[0] == 'x') {
      const int k = std::stoi(h.substr(1)) - 1;
      if (k >= 0 && k < d) xcol[k] = c;
    }
  }
  if (ycol < 0) throw std::runtime_error("'" + path + "' has no y column");
  for (int k = 0; k < d; ++k)
    if (xcol[k] < 0) throw std::runtime_error("'" + path + "' lacks column x" + std::to_string(k + 1));

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream rs(line);
    std::string v;
    while (std::getline(rs, v, ',')) r.push_back(std::stod(v));
    if (r.size() != header.size()) throw std::runtime_error("ragged row in '" + path + "'");
    rows.push_back(std::move(r));
  }
  CsvSamples s;
  const auto m = static_cast<Eigen::Index>(rows.size());
  s.points.resize(m, d);
  s.weights = Eigen::VectorXd::Ones(m);
  s.values.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) s.points(i, k) = rows[i][xcol[k]];
    s.values(i) = rows[i][ycol];
    if (wcol >= 0) s.weights(i) = rows[i][wcol];
  }
  return s;
}

template <typename T>
std::vector<T> split_list(const std::string& s, T (*conv)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(conv(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted least-squares polynomial approximation with Christoffel sampling"};
  app.require_subcommand(1);

  // basis
  BasisOptions basis_opts;
  std::string basis_points;
  auto* basis_cmd = app.add_subcommand("basis", "Print the ordered index list and spot evaluations");
  basis_opts.add_to(basis_cmd);
  basis_cmd->add_option("--points", basis_points, "Spot points as x1,x2;x1,x2;...");

  // kappa
  BasisOptions kappa_opts;
  std::string kappa_weight = "mc";
  int kappa_grid = 0;
  auto* kappa_cmd = app.add_subcommand("kappa", "Numerical ess sup of w K and reference lines");
  kappa_opts.add_to(kappa_cmd);
  kappa_cmd->add_option("--weight", kappa_weight, "mc, opt or reg[:theta]")->capture_default_str();
  kappa_cmd->add_option("--grid", kappa_grid, "Grid points per dimension (0: automatic)")
      ->capture_default_str();

  // sample
  BasisOptions sample_opts;
  std::string sample_strategy = "mixture", sample_weight = "opt", sample_out;
  Eigen::Index sample_m = 100;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a weighted sample plan");
  sample_opts.add_to(sample_cmd);
  sample_cmd->add_option("--strategy", sample_strategy, "mc, mixture, per-basis or discrete")
      ->capture_default_str();
  sample_cmd->add_option("--weight", sample_weight, "mc, opt or reg[:theta] (ignored for mc)")
      ->capture_default_str();
  sample_cmd->add_option("--m", sample_m, "Number of points")->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "Seed")->capture_default_str();
  sample_cmd->add_option("--out", sample_out, "Output CSV (default stdout)");

  // fit
  BasisOptions fit_opts;
  std::string fit_function = "runge", fit_strategy = "mixture", fit_weight = "opt",
              fit_estimator = "plain", fit_coeffs_out;
  Eigen::Index fit_m = 0;
  std::uint64_t fit_seed = 0;
  double fit_noise = 0.0;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a builtin target or a CSV of samples");
  fit_opts.add_to(fit_cmd);
  fit_cmd->add_option("--function", fit_function,
                      "runge, exp_sum, abs_power, in_span, or a CSV with x1..xd,y[,weight]")
      ->capture_default_str();
  fit_cmd->add_option("--strategy", fit_strategy, "mc, mixture, per-basis or discrete")
      ->capture_default_str();
  fit_cmd->add_option("--weight", fit_weight, "mc, opt or reg[:theta]")->capture_default_str();
  fit_cmd->add_option("--estimator", fit_estimator, "plain, cond:delta, trunc:sigma, redraw:delta")
      ->capture_default_str();
  fit_cmd->add_option("--m", fit_m, "Sample size (0: Chernoff count at delta=1/2, eps=0.1)");
  fit_cmd->add_option("--seed", fit_seed, "Seed")->capture_default_str();
  fit_cmd->add_option("--noise", fit_noise, "Gaussian noise level")->capture_default_str();
  fit_cmd->add_option("--coeffs-out", fit_coeffs_out, "Coefficient CSV (default stdout)");

  // experiment
  std::string exp_config, exp_out;
  int exp_threads = -1;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a JSON-configured sweep");
  exp_cmd->add_option("--config", exp_config, "JSON config")->required();
  exp_cmd->add_option("--out", exp_out, "Trial CSV (overrides the config's output)");
  exp_cmd->add_option("--threads", exp_threads, "Worker threads (0: all cores)");

  // compare
  bool cmp_kappa = false;
  std::string cmp_families = "uniform,chebyshev1", cmp_kinds = "td,hc", cmp_n = "5,10,20,50,100",
              cmp_weight = "mc", cmp_out;
  int cmp_dim = 2;
  auto* cmp_cmd = app.add_subcommand("compare", "Comparison tables");
  cmp_cmd->add_flag("--kappa", cmp_kappa, "Measured kappa against the lower-set reference bounds");
  cmp_cmd->add_option("--families", cmp_families, "Comma-separated families")->capture_default_str();
  cmp_cmd->add_option("--kinds", cmp_kinds, "Comma-separated index kinds")->capture_default_str();
  cmp_cmd->add_option("--n", cmp_n, "Comma-separated basis sizes")->capture_default_str();
  cmp_cmd->add_option("--dim", cmp_dim, "Dimension")->capture_default_str();
  cmp_cmd->add_option("--weight", cmp_weight, "Weight for kappa_w")->capture_default_str();
  cmp_cmd->add_option("--out", cmp_out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*basis_cmd) {
      const auto B = basis_opts.build();
      std::cout << "measure=" << B.measure().name() << "\nn=" << B.size() << "\ndim=" << B.dim()
                << "\nlower=" << (wls::is_lower(B.index_set()) ? "true" : "false") << "\n";
      std::cout << "column,nu\n";
      for (std::size_t j = 0; j < B.index_set().size(); ++j) {
        std::cout << j << ",\"" << join_index(B.index_set()[j]) << "\"\n";
      }
      const auto pts = basis_points.empty() ? default_points(B.measure())
                                            : parse_points(basis_points, B.dim());
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        std::cout << "psi(" << join_row(pts.row(i).transpose())
                  << ")=" << join_row(B.eval_row(pts.row(i).transpose())) << "\n";
      }
      return 0;
    }

    if (*kappa_cmd) {
      const auto B = kappa_opts.build();
      const auto spec = wls::WeightSpec::parse(kappa_weight);
      wls::KappaSearch search;
      search.points_per_dim = kappa_grid;
      const auto k = wls::kappa_w(B, spec, search);
      const double n = static_cast<double>(B.size());
      std::cout << "weight=" << spec.name() << "\nn=" << B.size()
                << "\nkappa_w=" << wls::format_double(k.value) << "\nargmax="
                << (k.argmax.size() ? join_row(k.argmax) : std::string("none"))
                << "\nref_n=" << wls::format_double(n)
                << "\nref_n2=" << wls::format_double(n * n)
                << "\nref_n_log3_log2=" << wls::format_double(std::pow(n, std::log(3.0) / std::log(2.0)))
                << "\n";
      return 0;
    }

    if (*sample_cmd) {
      const auto B = sample_opts.build();
      const auto strategy = wls::parse_strategy(sample_strategy);
      const auto spec = strategy == wls::Strategy::MonteCarlo ? wls::WeightSpec::monte_carlo()
                                                              : wls::WeightSpec::parse(sample_weight);
      const auto plan = wls::draw_plan(B, strategy, spec, sample_m, sample_seed);
      auto f = open_out(sample_out);
      write_plan_csv(f ? *f : std::cout, plan);
      return 0;
    }

    if (*fit_cmd) {
      const auto B = fit_opts.build();
      const auto est = wls::parse_estimator(fit_estimator);
      const bool builtin = fit_function == "runge" || fit_function == "exp_sum" ||
                           fit_function == "abs_power" || fit_function == "in_span";
      wls::FitResult fr;
      std::optional<wls::Target> target;
      Eigen::Index m_used = 0;
      if (builtin) {
        target = wls::builtin_target(fit_function, B, wls::mix_seed(fit_seed, 0x7a49e7));
        const auto strategy = wls::parse_strategy(fit_strategy);
        const auto spec = strategy == wls::Strategy::MonteCarlo ? wls::WeightSpec::monte_carlo()
                                                                : wls::WeightSpec::parse(fit_weight);
        Eigen::Index m = fit_m;
        if (m == 0) {
          const auto k = wls::kappa_w(B, spec);
          if (k.infinite) throw wls::DomainError("kappa_w is infinite; pass --m explicitly");
          m = wls::chernoff_sample_count(k.value, B.size(), 0.5, 0.1);
        }
        const auto draw = [&](int attempt) {
          const auto a = static_cast<std::uint64_t>(attempt);
          auto plan = wls::draw_plan(B, strategy, spec, m, wls::mix_seed(fit_seed, 1 + 2 * a));
          wls::NoisySamples y;
          y.values.resize(plan.size());
          for (Eigen::Index i = 0; i < plan.size(); ++i)
            y.values(i) = target->f(plan.points.row(i).transpose());
          if (fit_noise > 0.0)
            y.values += wls::gaussian_noise(plan.size(), fit_noise, wls::mix_seed(fit_seed, 2 + 2 * a));
          return std::pair{std::move(plan), std::move(y)};
        };
        if (const auto* rd = std::get_if<wls::estimator::Redraw>(&est)) {
          fr = wls::fit_redraw(B, draw, *rd);
          m_used = draw(fr.redraw_count).first.size();
        } else {
          auto [plan, y] = draw(0);
          m_used = plan.size();
          fr = wls::fit(B, plan, y, est);
        }
      } else {
        if (std::holds_alternative<wls::estimator::Redraw>(est)) {
          throw std::invalid_argument("redraw needs fresh samples; not available for CSV input");
        }
        const auto s = read_samples(fit_function, B.dim());
        wls::SamplePlan plan;
        plan.points = s.points;
        plan.weights = s.weights;
        m_used = plan.size();
        fr = wls::fit(B, plan, wls::NoisySamples{s.values}, est);
      }

      std::cout << "n=" << B.size() << "\nm=" << m_used
                << "\nestimator=" << wls::estimator_name(fr.estimator)
                << "\nalpha_w=" << wls::format_double(fr.alpha_w)
                << "\nbeta_w=" << wls::format_double(fr.beta_w)
                << "\ncond=" << wls::format_double(fr.cond)
                << "\ngram_deviation=" << wls::format_double(fr.gram_deviation)
                << "\nresidual_disc=" << wls::format_double(fr.residual_disc)
                << "\nrank=" << fr.rank << "\nrank_deficient=" << (fr.rank_deficient ? "true" : "false")
                << "\nredraw_count=" << fr.redraw_count << "\n";
      if (target) {
        const auto rep = wls::error_report(B, fr.coefficients, target->f,
                                           wls::error_quadrature_points(B));
        std::cout << "l2_error=" << wls::format_double(rep.l2_error)
                  << "\nlinf_error=" << wls::format_double(rep.linf_error)
                  << "\nbest_approx_l2=" << wls::format_double(rep.best_approx_l2) << "\n";
      }
      auto f = open_out(fit_coeffs_out);
      std::ostream& os = f ? *f : std::cout;
      os << "column,nu,coefficient\n";
      for (Eigen::Index j = 0; j < fr.coefficients.size(); ++j) {
        os << j << ",\"" << join_index(B.index_set()[static_cast<std::size_t>(j)]) << "\","
           << wls::format_double(fr.coefficients(j)) << "\n";
      }
      return 0;
    }

    if (*exp_cmd) {
      wls::ExperimentConfig cfg;
      try {
        cfg = wls::ExperimentConfig::from_file(exp_config);
        if (!exp_out.empty()) cfg.output = exp_out;
        if (exp_threads >= 0) cfg.threads = exp_threads;
        if (cfg.output.empty()) throw wls::ConfigError("no output path (set 'output' or --out)");
      } catch (const wls::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
      const auto res = wls::run_experiment_to_files(cfg);
      std::cout << "run_id=" << res.run_id << "\n" << wls::summary_csv_header() << "\n";
      for (const auto& c : res.cells) std::cout << wls::to_csv_row(c) << "\n";
      for (const auto& a : res.assertions) {
        std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << ":" << a.detail << "\n";
      }
      return res.all_passed() ? 0 : 1;
    }

    if (*cmp_cmd) {
      if (!cmp_kappa) {
        std::cerr << "compare: choose a table (--kappa)\n";
        return 2;
      }
      wls::KappaCompareConfig cfg;
      cfg.families = split_list<std::string>(cmp_families, [](const std::string& s) { return s; });
      cfg.kinds = split_list<wls::IndexKind>(
          cmp_kinds, [](const std::string& s) { return wls::parse_index_kind(s); });
      cfg.n_values = split_list<Eigen::Index>(
          cmp_n, [](const std::string& s) { return static_cast<Eigen::Index>(std::stoll(s)); });
      cfg.dim = cmp_dim;
      cfg.weight = wls::WeightSpec::parse(cmp_weight);
      const auto rows = wls::compare_kappa(cfg);
      auto f = open_out(cmp_out);
      std::ostream& os = f ? *f : std::cout;
      os << wls::kappa_csv_header() << "\n";
      bool exceeded = false;
      for (const auto& r : rows) {
        os << wls::to_csv_row(r) << "\n";
        exceeded = exceeded || r.status == "exceeds";
      }
      return exceeded ? 1 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
