#pragma once

#include <vector>

#include "wls/measures.hpp"
#include "wls/orthopoly.hpp"
#include "wls/rng.hpp"

namespace wls {

/// Degree cap for induced sampling on the unbounded families, where the
/// truncated support grows with the degree. Jacobi families go up to the
/// evaluation cap.
inline constexpr int kMaxInducedDegree = 60;

inline int max_induced_degree(const MeasureFamily1D& fam) noexcept {
  return fam.bounded() ? kMaxPolyDegree : kMaxInducedDegree;
}

/// Sampler for the induced measure psi_j(x)^2 d rho(x).
///
/// The CDF is tabulated once on a grid (Chebyshev-clustered for Jacobi,
/// uniform on a truncated interval for Gaussian/Exponential). Cell masses
/// are computed with Gauss-Legendre in the interior and with Gauss-Jacobi
/// rules on the two end cells, which absorb the endpoint singularity of
/// the Jacobi weight. A draw brackets u in the table and solves F(x) = u in
/// that cell by safeguarded Newton against the exact cell integral.
class InducedSampler {
 public:
  InducedSampler(const MeasureFamily1D& fam, int degree, int table_size = 4096);

  const MeasureFamily1D& family() const noexcept { return fam_; }
  int degree() const noexcept { return degree_; }
  double lower() const noexcept { return grid_.front(); }
  double upper() const noexcept { return grid_.back(); }

  /// psi_j(x)^2 rho(x).
  double density(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  double sample(Rng& rng) const { return quantile(rng.uniform()); }

 private:
  double integrand(double x) const;
  /// Integral of the density from grid_[cell] to x, with x inside the cell.
  double partial(std::size_t cell, double x) const;

  MeasureFamily1D fam_;
  int degree_;
  UnivariateBasis poly_;
  std::vector<double> grid_;
  std::vector<double> cum_;  // unnormalized CDF at grid nodes
  double total_ = 1.0;
  QuadratureRule<> legendre_;
  QuadratureRule<> left_;   // Jacobi(0, beta), first cell
  QuadratureRule<> right_;  // Jacobi(alpha, 0), last cell
  double left_norm_ = 1.0;
  double right_norm_ = 1.0;
};

/// Process-wide cache of samplers keyed by (family, degree). Entries are
/// immutable once built and safe to share between threads.
const InducedSampler& induced_sampler(const MeasureFamily1D& fam, int degree);

}  // namespace wls
