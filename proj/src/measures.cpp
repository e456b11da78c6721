#include "wls/measures.hpp"

#include <charconv>
#include <numbers>
#include <sstream>

#include "wls/induced.hpp"

namespace wls {

namespace {

double parse_real(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("cannot parse " + std::string(what) + " from '" + std::string(s) +
                                "'");
  }
  return v;
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

MeasureFamily1D MeasureFamily1D::jacobi(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0)) {
    throw DomainError("Jacobi parameters must exceed -1 (got alpha=" + shortest(alpha) +
                      ", beta=" + shortest(beta) + ")");
  }
  return {FamilyKind::Jacobi, alpha, beta};
}

MeasureFamily1D MeasureFamily1D::parse(std::string_view spec) {
  if (spec == "uniform" || spec == "legendre") return uniform();
  if (spec == "chebyshev1") return chebyshev_first();
  if (spec == "chebyshev2") return chebyshev_second();
  if (spec == "gaussian" || spec == "hermite") return gaussian();
  if (spec == "exponential" || spec == "laguerre") return exponential();
  if (spec.starts_with("jacobi:")) {
    const auto parts = split(spec.substr(7), ':');
    if (parts.size() != 2) throw std::invalid_argument("expected jacobi:alpha:beta");
    return jacobi(parse_real(parts[0], "alpha"), parse_real(parts[1], "beta"));
  }
  throw std::invalid_argument("unknown measure family '" + std::string(spec) + "'");
}

double MeasureFamily1D::lower() const noexcept {
  switch (kind_) {
    case FamilyKind::Jacobi:
      return -1.0;
    case FamilyKind::Gaussian:
      return -std::numeric_limits<double>::infinity();
    case FamilyKind::Exponential:
      return 0.0;
  }
  return 0.0;
}

double MeasureFamily1D::upper() const noexcept {
  return kind_ == FamilyKind::Jacobi ? 1.0 : std::numeric_limits<double>::infinity();
}

std::string MeasureFamily1D::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian:
      return "gaussian";
    case FamilyKind::Exponential:
      return "exponential";
    case FamilyKind::Jacobi:
      break;
  }
  if (alpha_ == 0.0 && beta_ == 0.0) return "uniform";
  if (alpha_ == -0.5 && beta_ == -0.5) return "chebyshev1";
  if (alpha_ == 0.5 && beta_ == 0.5) return "chebyshev2";
  return "jacobi:" + shortest(alpha_) + ":" + shortest(beta_);
}

double jacobi_normalizer(double alpha, double beta) {
  const double log_c = std::lgamma(alpha + beta + 2.0) - (alpha + beta + 1.0) * std::log(2.0) -
                       std::lgamma(alpha + 1.0) - std::lgamma(beta + 1.0);
  return std::exp(log_c);
}

double density(const MeasureFamily1D& fam, double x) {
  if (!fam.contains(x)) {
    throw DomainError("density: x=" + shortest(x) + " outside support of " + fam.name());
  }
  switch (fam.kind()) {
    case FamilyKind::Gaussian:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case FamilyKind::Exponential:
      return std::exp(-x);
    case FamilyKind::Jacobi:
      break;
  }
  const double a = fam.alpha();
  const double b = fam.beta();
  if ((x == 1.0 && a < 0.0) || (x == -1.0 && b < 0.0)) {
    throw DomainError("density: singular endpoint x=" + shortest(x) + " for " + fam.name());
  }
  return jacobi_normalizer(a, b) * std::pow(1.0 - x, a) * std::pow(1.0 + x, b);
}

double sample_rho(const MeasureFamily1D& fam, Rng& rng) {
  switch (fam.kind()) {
    case FamilyKind::Gaussian:
      return rng.normal();
    case FamilyKind::Exponential:
      return -std::log(rng.uniform_pos());
    case FamilyKind::Jacobi:
      break;
  }
  if (fam == MeasureFamily1D::uniform()) return 2.0 * rng.uniform() - 1.0;
  if (fam == MeasureFamily1D::chebyshev_first()) return std::cos(std::numbers::pi * rng.uniform());
  return induced_sampler(fam, 0).sample(rng);
}

TensorMeasure::TensorMeasure(std::vector<MeasureFamily1D> f) : factors(std::move(f)) {
  if (factors.empty()) throw DomainError("tensor measure needs at least one factor");
}

TensorMeasure::TensorMeasure(const MeasureFamily1D& fam, int d) {
  if (d < 1) throw DomainError("tensor measure dimension must be >= 1");
  factors.assign(static_cast<std::size_t>(d), fam);
}

TensorMeasure TensorMeasure::parse(std::string_view spec, int dim) {
  std::vector<MeasureFamily1D> f;
  for (auto part : split(spec, ',')) f.push_back(MeasureFamily1D::parse(part));
  if (f.size() == 1 && dim > 1) return TensorMeasure(f.front(), dim);
  if (dim > 0 && static_cast<int>(f.size()) != dim) {
    throw DomainError("measure '" + std::string(spec) + "' has " + std::to_string(f.size()) +
                      " factors but dim=" + std::to_string(dim));
  }
  return TensorMeasure(std::move(f));
}

bool TensorMeasure::bounded() const noexcept {
  for (const auto& f : factors)
    if (!f.bounded()) return false;
  return true;
}

std::string TensorMeasure::name() const {
  std::string s;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k) s += ',';
    s += factors[k].name();
  }
  return s;
}

double TensorMeasure::density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw DomainError("density: point dimension mismatch");
  double p = 1.0;
  for (int k = 0; k < dim(); ++k) p *= wls::density(factors[k], x(k));
  return p;
}

Eigen::VectorXd TensorMeasure::sample(Rng& rng) const {
  Eigen::VectorXd x(dim());
  for (int k = 0; k < dim(); ++k) x(k) = sample_rho(factors[k], rng);
  return x;
}

TensorRule tensor_gauss_rule(const TensorMeasure& measure, int q_per_dim,
                             std::size_t max_points) {
  const int d = measure.dim();
  double total = 1.0;
  for (int k = 0; k < d; ++k) total *= q_per_dim;
  if (total > static_cast<double>(max_points)) {
    std::ostringstream os;
    os << "tensor quadrature with " << q_per_dim << "^" << d << " points exceeds cap "
       << max_points;
    throw SizeError(os.str());
  }
  std::vector<QuadratureRule<>> rules;
  rules.reserve(d);
  for (const auto& f : measure.factors) rules.push_back(gauss_rule(f, q_per_dim));

  const auto npts = static_cast<Eigen::Index>(total);
  TensorRule out;
  out.nodes.resize(npts, d);
  out.weights.resize(npts);
  std::vector<int> idx(d, 0);
  for (Eigen::Index p = 0; p < npts; ++p) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      out.nodes(p, k) = rules[k].nodes(idx[k]);
      w *= rules[k].weights(idx[k]);
    }
    out.weights(p) = w;
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < q_per_dim) break;
      idx[k] = 0;
    }
  }
  return out;
}

}  // namespace wls
