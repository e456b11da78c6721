#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "wls/errors.hpp"
#include "wls/rng.hpp"

namespace wls {

enum class FamilyKind { Jacobi, Gaussian, Exponential };

/// A univariate probability measure from one of the classical families.
///
/// Uniform and the two Chebyshev measures are not separate kinds: they are
/// Jacobi measures with (0,0), (-1/2,-1/2) and (1/2,1/2), so equal parameters
/// always mean equal densities. Gaussian is the standard normal, Exponential
/// is e^{-x} on [0, inf).
class MeasureFamily1D {
 public:
  static MeasureFamily1D jacobi(double alpha, double beta);
  static MeasureFamily1D uniform() { return jacobi(0.0, 0.0); }
  static MeasureFamily1D chebyshev_first() { return jacobi(-0.5, -0.5); }
  static MeasureFamily1D chebyshev_second() { return jacobi(0.5, 0.5); }
  static MeasureFamily1D gaussian() { return {FamilyKind::Gaussian, 0.0, 0.0}; }
  static MeasureFamily1D exponential() { return {FamilyKind::Exponential, 0.0, 0.0}; }

  /// Accepts "uniform", "chebyshev1", "chebyshev2", "jacobi:a:b",
  /// "gaussian", "exponential".
  static MeasureFamily1D parse(std::string_view spec);

  FamilyKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  bool bounded() const noexcept { return kind_ == FamilyKind::Jacobi; }
  double lower() const noexcept;
  double upper() const noexcept;
  /// True for x in the closure of the support.
  bool contains(double x) const noexcept { return x >= lower() && x <= upper(); }
  /// Canonical config string; parse(name()) == *this.
  std::string name() const;

  friend bool operator==(const MeasureFamily1D&, const MeasureFamily1D&) = default;

 private:
  MeasureFamily1D(FamilyKind kind, double alpha, double beta)
      : kind_(kind), alpha_(alpha), beta_(beta) {}

  FamilyKind kind_;
  double alpha_;
  double beta_;
};

/// c_{a,b} such that c (1-x)^a (1+x)^b integrates to one on (-1,1).
double jacobi_normalizer(double alpha, double beta);

/// Probability density at x. Throws DomainError outside the support, and at
/// a Jacobi endpoint where the density is singular.
double density(const MeasureFamily1D& fam, double x);

/// One draw from the measure.
double sample_rho(const MeasureFamily1D& fam, Rng& rng);

template <typename Real = double>
struct Recurrence {
  Real a;
  Real b;
};

/// Coefficients of the orthonormal three-term recurrence
///   sqrt(b_{k+1}) psi_{k+1} = (x - a_k) psi_k - sqrt(b_k) psi_{k-1},
/// with psi_0 = 1, psi_{-1} = 0 and the convention b_0 = 1.
template <typename Real = double>
Recurrence<Real> recurrence_coeffs(const MeasureFamily1D& fam, int k) {
  if (k < 0) throw DomainError("recurrence index must be nonnegative");
  const Real kk = static_cast<Real>(k);
  switch (fam.kind()) {
    case FamilyKind::Gaussian:
      return {Real(0), k == 0 ? Real(1) : kk};
    case FamilyKind::Exponential:
      return {2 * kk + 1, k == 0 ? Real(1) : kk * kk};
    case FamilyKind::Jacobi:
      break;
  }
  const Real al = static_cast<Real>(fam.alpha());
  const Real be = static_cast<Real>(fam.beta());
  const Real s = al + be;
  Recurrence<Real> r{};
  if (k == 0) {
    r.a = (be - al) / (s + 2);
    r.b = Real(1);
    return r;
  }
  const Real t = 2 * kk + s;
  r.a = (be * be - al * al) / (t * (t + 2));
  if (k == 1) {
    // general formula has a removable 0/0 when a + b = -1
    r.b = 4 * (1 + al) * (1 + be) / ((2 + s) * (2 + s) * (3 + s));
  } else {
    r.b = 4 * kk * (kk + al) * (kk + be) * (kk + s) / (t * t * (t + 1) * (t - 1));
  }
  return r;
}

namespace detail {

/// Fills out[0..n) with psi_0(x), ..., psi_{n-1}(x).
template <typename Real>
void orthonormal_values(const MeasureFamily1D& fam, Real x, Real* out, int n) {
  if (n <= 0) return;
  out[0] = Real(1);
  if (n == 1) return;
  Real prev = 0;
  Real sqrt_bk = 0;
  for (int k = 0; k + 1 < n; ++k) {
    const auto rk = recurrence_coeffs<Real>(fam, k);
    const auto rk1 = recurrence_coeffs<Real>(fam, k + 1);
    using std::sqrt;
    const Real sqrt_bk1 = sqrt(rk1.b);
    out[k + 1] = ((x - rk.a) * out[k] - sqrt_bk * prev) / sqrt_bk1;
    prev = out[k];
    sqrt_bk = sqrt_bk1;
  }
}

/// psi_q(x) and its derivative, for Newton polishing of Gauss nodes.
template <typename Real>
std::pair<Real, Real> orthonormal_value_and_derivative(const MeasureFamily1D& fam, int q,
                                                       Real x) {
  using std::sqrt;
  Real p_prev = 0, p = 1, d_prev = 0, d = 0;
  Real sqrt_bk = 0;
  for (int k = 0; k < q; ++k) {
    const auto rk = recurrence_coeffs<Real>(fam, k);
    const Real sqrt_bk1 = sqrt(recurrence_coeffs<Real>(fam, k + 1).b);
    const Real p_next = ((x - rk.a) * p - sqrt_bk * p_prev) / sqrt_bk1;
    const Real d_next = ((x - rk.a) * d + p - sqrt_bk * d_prev) / sqrt_bk1;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
    sqrt_bk = sqrt_bk1;
  }
  return {p, d};
}

}  // namespace detail

template <typename Real = double>
struct QuadratureRule {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Real, Eigen::Dynamic, 1> weights;
  int exactness_degree = 0;
};

/// q-point Gauss rule for the measure.
///
/// Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix,
/// polished by Newton on psi_q. Weights come from the Christoffel numbers
/// 1 / sum_{k<q} psi_k(x_i)^2, which keeps tiny tail weights (Hermite,
/// Laguerre) accurate to relative precision instead of absolute.
template <typename Real = double>
QuadratureRule<Real> gauss_rule(const MeasureFamily1D& fam, int q) {
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  if (q < 1) throw DomainError("gauss_rule: need at least one node");

  Vec diag(q);
  Vec sub(q > 1 ? q - 1 : 1);
  for (int k = 0; k < q; ++k) {
    const auto r = recurrence_coeffs<Real>(fam, k);
    diag(k) = r.a;
    if (k > 0) {
      using std::sqrt;
      sub(k - 1) = sqrt(r.b);
    }
  }
  QuadratureRule<Real> rule;
  rule.exactness_degree = 2 * q - 1;
  if (q == 1) {
    rule.nodes = diag;
    rule.weights = Vec::Ones(1);
    return rule;
  }

  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(diag, sub.head(q - 1), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("gauss_rule: tridiagonal eigen-decomposition failed for " + fam.name() +
                         " with q=" + std::to_string(q));
  }
  rule.nodes = es.eigenvalues();

  using std::abs;
  for (int i = 0; i < q; ++i) {
    Real x = rule.nodes(i);
    for (int it = 0; it < 3; ++it) {
      const auto [p, dp] = detail::orthonormal_value_and_derivative<Real>(fam, q, x);
      if (dp == Real(0)) break;
      const Real step = p / dp;
      if (!(abs(step) < Real(1e-6) * (1 + abs(x)))) break;
      x -= step;
      if (abs(step) <= std::numeric_limits<Real>::epsilon() * (1 + abs(x))) break;
    }
    if (fam.contains(static_cast<double>(x))) rule.nodes(i) = x;
  }

  rule.weights.resize(q);
  std::vector<Real> psi(q);
  for (int i = 0; i < q; ++i) {
    detail::orthonormal_values<Real>(fam, rule.nodes(i), psi.data(), q);
    Real s = 0;
    for (const Real& v : psi) s += v * v;
    rule.weights(i) = Real(1) / s;
  }
  const Real total = rule.weights.sum();
  if (!(abs(total - Real(1)) < Real(1e-8))) {
    throw NumericalError("gauss_rule: weights sum to " + std::to_string(double(total)) +
                         " for " + fam.name());
  }
  rule.weights /= total;
  return rule;
}

/// Product measure rho_1 x ... x rho_d.
struct TensorMeasure {
  std::vector<MeasureFamily1D> factors;

  TensorMeasure() = default;
  explicit TensorMeasure(std::vector<MeasureFamily1D> f);
  /// d copies of one family.
  TensorMeasure(const MeasureFamily1D& fam, int d);

  /// Comma-separated list of family names; a single name is replicated
  /// `dim` times when dim > 1.
  static TensorMeasure parse(std::string_view spec, int dim = 0);

  int dim() const noexcept { return static_cast<int>(factors.size()); }
  bool bounded() const noexcept;
  std::string name() const;
  double density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd sample(Rng& rng) const;
};

/// Tensor-product Gauss rule; nodes are rows of an N x d matrix.
struct TensorRule {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
};

/// Throws SizeError when q^d exceeds max_points.
TensorRule tensor_gauss_rule(const TensorMeasure& measure, int q_per_dim,
                             std::size_t max_points = 4'000'000);

}  // namespace wls
