#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>

#include "wls/orthopoly.hpp"

namespace wls {

enum class WeightKind {
  MonteCarlo,      ///< w = 1
  OptimalInverse,  ///< w = n / K
  Regularized      ///< w = 1 / (theta + (1 - theta) K / n)
};

struct WeightSpec {
  WeightKind kind = WeightKind::Regularized;
  double theta = 0.5;  ///< only meaningful for Regularized

  static WeightSpec monte_carlo() { return {WeightKind::MonteCarlo, 1.0}; }
  static WeightSpec optimal() { return {WeightKind::OptimalInverse, 0.0}; }
  /// theta must lie in (0,1).
  static WeightSpec regularized(double theta = 0.5);
  /// "mc", "opt", "reg" or "reg:theta".
  static WeightSpec parse(std::string_view s);
  std::string name() const;

  /// Mass of rho in the sampling mixture theta rho + (1 - theta) (K/n) rho:
  /// 1 for Monte Carlo, 0 for the optimal weight.
  double rho_fraction() const noexcept;

  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

/// K(x) = sum_j |Psi_j(x)|^2.
double christoffel_K(const OrthoBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& x);

/// w as a function of K(x) and n. Throws DomainError for the optimal weight
/// at K = 0.
double weight_from_christoffel(const WeightSpec& spec, double K, double n);

double weight(const OrthoBasis& basis, const WeightSpec& spec,
              const Eigen::Ref<const Eigen::VectorXd>& x);

struct KappaSearch {
  /// Grid points per dimension; 0 picks max(10 * (max degree + 1), 64).
  int points_per_dim = 0;
  int polish_sweeps = 2;
  std::size_t max_grid_points = 4'000'000;
};

struct KappaResult {
  double value = 0.0;
  Eigen::VectorXd argmax;
  /// Set for Monte Carlo weights on an unbounded family, where
  /// sup K = +inf; value is then +inf and argmax is empty.
  bool infinite = false;
};

/// Numerical esssup of w(x) K(x): tensor grid of Chebyshev-clustered points
/// followed by coordinate-wise golden-section ascent around the grid
/// argmax. Ties keep the lowest grid index.
KappaResult kappa_w(const OrthoBasis& basis, const WeightSpec& spec, const KappaSearch& search = {});

/// kappa_w >= n - 1e-6 n.
bool kappa_lower_bound_check(const OrthoBasis& basis, const WeightSpec& spec,
                             const KappaSearch& search = {});

}  // namespace wls
