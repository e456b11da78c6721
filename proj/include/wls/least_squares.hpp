#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "wls/orthopoly.hpp"
#include "wls/sampling.hpp"

namespace wls {

/// y_i = f(x_i) + e_i, aligned with the rows of a SamplePlan.
struct NoisySamples {
  Eigen::VectorXd values;
};

struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// A_ij = sqrt(w_i / m) Psi_j(x_i), b_i = sqrt(w_i / m) y_i.
/// Throws NumericalError naming the first point with a nonfinite entry.
LinearSystem assemble(const OrthoBasis& basis, const SamplePlan& plan, const NoisySamples& samples);

template <typename Scalar>
struct SolveResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm least-squares solution via a complete orthogonal
/// decomposition (column-pivoted QR followed by RZ). A^T A is never formed.
template <typename DerivedA, typename DerivedB>
SolveResult<typename DerivedA::Scalar> solve(const Eigen::MatrixBase<DerivedA>& A,
                                             const Eigen::MatrixBase<DerivedB>& b,
                                             double rank_tol = 1e-12) {
  using Scalar = typename DerivedA::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  cod.setThreshold(static_cast<Scalar>(rank_tol));
  SolveResult<Scalar> out;
  out.coefficients = cod.solve(b);
  out.rank = cod.rank();
  out.rank_deficient = out.rank < A.cols();
  return out;
}

struct StabilityConstants {
  double alpha_w = 0.0;  ///< smallest singular value of A
  double beta_w = 0.0;   ///< largest singular value of A
  double cond = 0.0;     ///< beta / alpha (inf when alpha = 0)
  double gram_deviation = 0.0;  ///< ||A^T A - I||_2 = max(|1 - alpha^2|, |1 - beta^2|)
};

template <typename Derived>
StabilityConstants stability_constants(const Eigen::MatrixBase<Derived>& A) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  StabilityConstants s;
  if (A.cols() == 0) return s;
  Eigen::BDCSVD<Mat> svd(A);
  const auto& sv = svd.singularValues();
  // BDCSVD reports min(m, n) values; a wide matrix has alpha = 0
  s.beta_w = static_cast<double>(sv(0));
  s.alpha_w = A.rows() < A.cols() ? 0.0 : static_cast<double>(sv(sv.size() - 1));
  s.cond = s.alpha_w > 0.0 ? s.beta_w / s.alpha_w : std::numeric_limits<double>::infinity();
  s.gram_deviation =
      std::max(std::abs(1.0 - s.alpha_w * s.alpha_w), std::abs(1.0 - s.beta_w * s.beta_w));
  return s;
}

/// c_delta = ((1 + delta) log(1 + delta) - delta)^{-1}.
double chernoff_constant(double delta);

/// ceil(c_delta kappa_w log(log_multiplier n / epsilon)). The stability
/// estimate uses log_multiplier = 2; the in-probability error bounds use 4.
Eigen::Index chernoff_sample_count(double kappa_w, Eigen::Index n, double delta, double epsilon,
                                   double log_multiplier = 2.0);

namespace estimator {
struct Plain {};
/// Zero function whenever the Gram deviation exceeds delta.
struct Conditioned {
  double delta = 0.5;
};
/// Scales the fit down so that its L2 norm (= ||c||_2) is at most sigma.
struct Truncated {
  double sigma = 1.0;
};
/// Redraws the sample until the Gram deviation is at most delta.
struct Redraw {
  double delta = 0.5;
  int max_tries = 100;
};
}  // namespace estimator

using EstimatorSpec = std::variant<estimator::Plain, estimator::Conditioned, estimator::Truncated,
                                   estimator::Redraw>;

/// "plain", "cond:delta", "trunc:sigma", "redraw:delta[:max_tries]".
EstimatorSpec parse_estimator(std::string_view s);
std::string estimator_name(const EstimatorSpec& e);

struct FitResult {
  Eigen::VectorXd coefficients;
  double alpha_w = 0.0;
  double beta_w = 0.0;
  double cond = 0.0;
  double gram_deviation = 0.0;
  double residual_disc = 0.0;  ///< ||A c - b||_2, the weighted discrete residual
  EstimatorSpec estimator = estimator::Plain{};
  int redraw_count = 0;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Plain, Conditioned and Truncated fits on a fixed plan. Redraw needs a
/// way to regenerate samples; use fit_redraw.
FitResult fit(const OrthoBasis& basis, const SamplePlan& plan, const NoisySamples& samples,
              const EstimatorSpec& est = estimator::Plain{});

/// Produces a fresh (plan, samples) pair for the given attempt number.
using Regenerator = std::function<std::pair<SamplePlan, NoisySamples>(int attempt)>;

class RedrawExhausted : public NumericalError {
 public:
  RedrawExhausted(const std::string& what, FitResult last)
      : NumericalError(what), last_(std::move(last)) {}
  const FitResult& last() const noexcept { return last_; }

 private:
  FitResult last_;
};

/// Draws attempts 0, 1, ... until the Gram deviation is at most delta.
/// redraw_count is the number of rejected draws. Throws RedrawExhausted
/// after max_tries attempts.
FitResult fit_redraw(const OrthoBasis& basis, const Regenerator& regenerate,
                     const estimator::Redraw& spec);

/// sqrt((1/m) sum_i w_i g_i^2) for values g_i at the plan's points.
double disc_norm(const SamplePlan& plan, const Eigen::Ref<const Eigen::VectorXd>& values);

/// i.i.d. N(0, level^2) noise vector.
Eigen::VectorXd gaussian_noise(Eigen::Index m, double level, std::uint64_t seed);

using TargetFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

struct ErrorReportOptions {
  std::size_t max_quadrature_points = 2'000'000;
  int linf_points_per_dim = 0;  ///< 0: 2001 in 1D, 101 in 2D, at most 2e4 points otherwise
  Eigen::Index monte_carlo_points = 100'000;
  std::uint64_t seed = 0x5eed;
};

struct ErrorReport {
  double l2_error = 0.0;
  double linf_error = 0.0;
  double best_approx_l2 = 0.0;
  /// Projection coefficients of f onto the basis (the best approximation).
  Eigen::VectorXd best_coefficients;
  bool monte_carlo = false;  ///< quadrature too large; norms are MC estimates
  double l2_stderr = 0.0;
};

/// Error norms of candidate fits against a fixed target.
///
/// L2 norms use a q_per_dim^d tensor Gauss rule, or Monte Carlo
/// integration when that rule would exceed max_quadrature_points. The
/// sup norm is a maximum over a dense tensor grid (Chebyshev-clustered on
/// bounded axes, spanning the quadrature nodes on unbounded ones). Target
/// values are computed once, so reporting many fits is cheap.
class ErrorOracle {
 public:
  ErrorOracle(const OrthoBasis& basis, const TargetFunction& f, int q_per_dim,
              const ErrorReportOptions& opts = {});

  ErrorReport report(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;
  double l2_error(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;
  double linf_error(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;
  double best_approx_l2() const noexcept { return best_l2_; }
  const Eigen::VectorXd& best_coefficients() const noexcept { return best_; }
  bool monte_carlo() const noexcept { return monte_carlo_; }

 private:
  Eigen::MatrixXd V_;  ///< basis at the integration nodes
  Eigen::VectorXd w_;  ///< integration weights (sum one)
  Eigen::VectorXd fv_;
  Eigen::MatrixXd G_;  ///< basis on the sup-norm grid
  Eigen::VectorXd fg_;
  Eigen::VectorXd best_;
  double best_l2_ = 0.0;
  bool monte_carlo_ = false;
};

/// One-shot ErrorOracle(basis, f, q_per_dim, opts).report(coeffs).
ErrorReport error_report(const OrthoBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                         const TargetFunction& f, int q_per_dim,
                         const ErrorReportOptions& opts = {});

}  // namespace wls
