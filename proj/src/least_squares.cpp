#include "wls/least_squares.hpp"

#include <charconv>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace wls {

LinearSystem assemble(const OrthoBasis& basis, const SamplePlan& plan, const NoisySamples& samples) {
  const auto m = plan.size();
  if (m < 1) throw DomainError("assemble: empty sample plan");
  if (samples.values.size() != m) throw DomainError("assemble: sample values do not match plan");
  if (plan.weights.size() != m) throw DomainError("assemble: plan weights do not match points");

  LinearSystem sys;
  sys.A = basis.eval_matrix(plan.points);
  sys.b.resize(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = std::sqrt(plan.weights(i) * inv_m);
    sys.A.row(i) *= s;
    sys.b(i) = s * samples.values(i);
    if (!sys.A.row(i).allFinite() || !std::isfinite(sys.b(i))) {
      std::ostringstream os;
      os << "assemble: nonfinite entry at sample " << i << ", x = ("
         << plan.points.row(i) << ")";
      throw NumericalError(os.str());
    }
  }
  return sys;
}

double chernoff_constant(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  return 1.0 / ((1.0 + delta) * std::log1p(delta) - delta);
}

Eigen::Index chernoff_sample_count(double kappa_w, Eigen::Index n, double delta, double epsilon,
                                   double log_multiplier) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0,1)");
  if (n < 1) throw DomainError("n must be >= 1");
  if (!std::isfinite(kappa_w)) throw DomainError("kappa_w is infinite; no finite sample count");
  const double m = chernoff_constant(delta) * kappa_w *
                   std::log(log_multiplier * static_cast<double>(n) / epsilon);
  return static_cast<Eigen::Index>(std::ceil(m));
}

namespace {

double number(std::string_view s, std::string_view ctx) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number '" + std::string(s) + "' in " + std::string(ctx));
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

EstimatorSpec parse_estimator(std::string_view s) {
  if (s == "plain") return estimator::Plain{};
  const auto colon = s.find(':');
  const auto head = s.substr(0, colon);
  const auto rest = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);
  if (head == "cond") {
    const double d = rest.empty() ? 0.5 : number(rest, s);
    if (!(d > 0.0 && d < 1.0)) throw DomainError("conditioned estimator needs delta in (0,1)");
    return estimator::Conditioned{d};
  }
  if (head == "trunc") {
    const double sigma = number(rest, s);
    if (!(sigma >= 0.0)) throw DomainError("truncated estimator needs sigma >= 0");
    return estimator::Truncated{sigma};
  }
  if (head == "redraw") {
    estimator::Redraw r;
    if (!rest.empty()) {
      const auto c2 = rest.find(':');
      r.delta = number(rest.substr(0, c2), s);
      if (c2 != std::string_view::npos) r.max_tries = static_cast<int>(number(rest.substr(c2 + 1), s));
    }
    if (!(r.delta > 0.0 && r.delta < 1.0)) throw DomainError("redraw estimator needs delta in (0,1)");
    if (r.max_tries < 1) throw DomainError("redraw estimator needs max_tries >= 1");
    return r;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(s) + "'");
}

std::string estimator_name(const EstimatorSpec& e) {
  struct Visitor {
    std::string operator()(const estimator::Plain&) const { return "plain"; }
    std::string operator()(const estimator::Conditioned& c) const { return "cond:" + fmt(c.delta); }
    std::string operator()(const estimator::Truncated& t) const { return "trunc:" + fmt(t.sigma); }
    std::string operator()(const estimator::Redraw& r) const {
      return "redraw:" + fmt(r.delta) + ":" + std::to_string(r.max_tries);
    }
  };
  return std::visit(Visitor{}, e);
}

namespace {

FitResult plain_fit(const OrthoBasis& basis, const SamplePlan& plan, const NoisySamples& samples) {
  const auto sys = assemble(basis, plan, samples);
  const auto sol = solve(sys.A, sys.b);
  const auto st = stability_constants(sys.A);
  FitResult r;
  r.coefficients = sol.coefficients;
  r.rank = sol.rank;
  r.rank_deficient = sol.rank_deficient;
  r.alpha_w = st.alpha_w;
  r.beta_w = st.beta_w;
  r.cond = st.cond;
  r.gram_deviation = st.gram_deviation;
  r.residual_disc = (sys.A * sol.coefficients - sys.b).norm();
  return r;
}

}  // namespace

FitResult fit(const OrthoBasis& basis, const SamplePlan& plan, const NoisySamples& samples,
              const EstimatorSpec& est) {
  if (std::holds_alternative<estimator::Redraw>(est)) {
    throw std::invalid_argument("redraw estimator needs a regenerator; use fit_redraw");
  }
  FitResult r = plain_fit(basis, plan, samples);
  r.estimator = est;
  if (const auto* c = std::get_if<estimator::Conditioned>(&est)) {
    if (r.gram_deviation > c->delta) r.coefficients.setZero();
  } else if (const auto* t = std::get_if<estimator::Truncated>(&est)) {
    // Parseval: the L2 norm of the fit is the coefficient 2-norm
    const double norm = r.coefficients.norm();
    if (norm > t->sigma) r.coefficients *= t->sigma / norm;
  }
  return r;
}

FitResult fit_redraw(const OrthoBasis& basis, const Regenerator& regenerate,
                     const estimator::Redraw& spec) {
  FitResult last;
  for (int attempt = 0; attempt < spec.max_tries; ++attempt) {
    auto [plan, samples] = regenerate(attempt);
    last = plain_fit(basis, plan, samples);
    last.estimator = spec;
    last.redraw_count = attempt;
    if (last.gram_deviation <= spec.delta) return last;
  }
  last.redraw_count = spec.max_tries;
  throw RedrawExhausted("redraw estimator: no draw with Gram deviation <= " + fmt(spec.delta) +
                            " in " + std::to_string(spec.max_tries) + " tries (last " +
                            fmt(last.gram_deviation) + ")",
                        last);
}

double disc_norm(const SamplePlan& plan, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != plan.size()) throw DomainError("disc_norm: length mismatch");
  return std::sqrt((plan.weights.array() * values.array().square()).sum() /
                   static_cast<double>(plan.size()));
}

Eigen::VectorXd gaussian_noise(Eigen::Index m, double level, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd e(m);
  for (Eigen::Index i = 0; i < m; ++i) e(i) = level * rng.normal();
  return e;
}

namespace {

Eigen::MatrixXd dense_grid(const TensorMeasure& measure, const TensorRule* rule, int per_dim) {
  const int d = measure.dim();
  std::vector<std::vector<double>> axes(d);
  for (int k = 0; k < d; ++k) {
    const auto& f = measure.factors[k];
    double lo = f.lower(), hi = f.upper();
    if (!f.bounded()) {
      // extent of the quadrature nodes in this coordinate
      lo = rule ? rule->nodes.col(k).minCoeff() : -10.0;
      hi = rule ? rule->nodes.col(k).maxCoeff() : 10.0;
      if (f.kind() == FamilyKind::Exponential) lo = 0.0;
    }
    axes[k].resize(per_dim);
    for (int j = 0; j < per_dim; ++j) {
      const double t = -std::cos(std::numbers::pi * j / (per_dim - 1));
      axes[k][j] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
    }
    axes[k].front() = lo;
    axes[k].back() = hi;
  }
  Eigen::Index total = 1;
  for (int k = 0; k < d; ++k) total *= per_dim;
  Eigen::MatrixXd pts(total, d);
  std::vector<int> idx(d, 0);
  for (Eigen::Index p = 0; p < total; ++p) {
    for (int k = 0; k < d; ++k) pts(p, k) = axes[k][idx[k]];
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < per_dim) break;
      idx[k] = 0;
    }
  }
  return pts;
}

Eigen::VectorXd eval_target(const TargetFunction& f, const Eigen::MatrixXd& pts) {
  Eigen::VectorXd v(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) v(i) = f(pts.row(i).transpose());
  return v;
}

}  // namespace

ErrorOracle::ErrorOracle(const OrthoBasis& basis, const TargetFunction& f, int q_per_dim,
                         const ErrorReportOptions& opts) {
  if (q_per_dim < 1) throw DomainError("error oracle: q_per_dim must be >= 1");
  const int d = basis.dim();
  const double q_total = std::pow(static_cast<double>(q_per_dim), d);

  std::optional<TensorRule> rule;
  if (q_total <= static_cast<double>(opts.max_quadrature_points)) {
    rule = tensor_gauss_rule(basis.measure(), q_per_dim, opts.max_quadrature_points);
    V_ = basis.eval_matrix(rule->nodes);
    w_ = rule->weights;
    fv_ = eval_target(f, rule->nodes);
  } else {
    monte_carlo_ = true;
    const auto plan = sample_monte_carlo(basis.measure(), opts.monte_carlo_points, opts.seed);
    V_ = basis.eval_matrix(plan.points);
    w_ = Eigen::VectorXd::Constant(plan.size(), 1.0 / static_cast<double>(plan.size()));
    fv_ = eval_target(f, plan.points);
  }
  best_ = V_.transpose() * (w_.asDiagonal() * fv_);
  best_l2_ = l2_error(best_);

  int per_dim = opts.linf_points_per_dim;
  if (per_dim <= 0) {
    per_dim = d == 1 ? 2001 : d == 2 ? 101 : static_cast<int>(std::pow(2e4, 1.0 / d));
    per_dim = std::max(per_dim, 2);
  }
  const auto pts = dense_grid(basis.measure(), rule ? &*rule : nullptr, per_dim);
  G_ = basis.eval_matrix(pts);
  fg_ = eval_target(f, pts);
}

double ErrorOracle::l2_error(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
  if (coeffs.size() != V_.cols()) throw DomainError("error oracle: coefficient length mismatch");
  return std::sqrt((w_.array() * (fv_ - V_ * coeffs).array().square()).sum());
}

double ErrorOracle::linf_error(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
  if (coeffs.size() != G_.cols()) throw DomainError("error oracle: coefficient length mismatch");
  return (fg_ - G_ * coeffs).cwiseAbs().maxCoeff();
}

ErrorReport ErrorOracle::report(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
  ErrorReport rep;
  rep.l2_error = l2_error(coeffs);
  rep.linf_error = linf_error(coeffs);
  rep.best_approx_l2 = best_l2_;
  rep.best_coefficients = best_;
  rep.monte_carlo = monte_carlo_;
  if (monte_carlo_ && rep.l2_error > 0.0) {
    const double N = static_cast<double>(fv_.size());
    const Eigen::ArrayXd sq = (fv_ - V_ * coeffs).array().square();
    const double var = (sq - sq.mean()).square().sum() / (N - 1.0);
    // delta method for the square root
    rep.l2_stderr = std::sqrt(var / N) / (2.0 * rep.l2_error);
  }
  return rep;
}

ErrorReport error_report(const OrthoBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                         const TargetFunction& f, int q_per_dim, const ErrorReportOptions& opts) {
  if (coeffs.size() != basis.size()) throw DomainError("error_report: coefficient length mismatch");
  return ErrorOracle(basis, f, q_per_dim, opts).report(coeffs);
}

}  // namespace wls
