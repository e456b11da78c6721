#pragma once

#include <Eigen/Dense>

#include <vector>

#include "wls/index_sets.hpp"
#include "wls/measures.hpp"

namespace wls {

/// Degree cap for evaluation. Hermite and Laguerre values overflow well
/// beyond this for moderate |x|.
inline constexpr int kMaxPolyDegree = 200;

/// psi_i(x) for the orthonormal family of `fam`, by forward recurrence.
template <typename Real = double>
Real eval_univariate(const MeasureFamily1D& fam, int degree, Real x) {
  if (degree < 0) throw DomainError("eval_univariate: negative degree");
  if (degree > kMaxPolyDegree) throw DomainError("eval_univariate: degree above cap");
  if (!fam.contains(static_cast<double>(x))) {
    throw DomainError("eval_univariate: x outside support of " + fam.name());
  }
  std::vector<Real> v(static_cast<std::size_t>(degree) + 1);
  detail::orthonormal_values<Real>(fam, x, v.data(), degree + 1);
  return v.back();
}

/// Recurrence coefficients cached up to a fixed degree, for evaluating
/// psi_0..psi_p at many points.
class UnivariateBasis {
 public:
  UnivariateBasis(const MeasureFamily1D& fam, int max_degree);

  const MeasureFamily1D& family() const noexcept { return fam_; }
  int max_degree() const noexcept { return max_degree_; }

  /// Writes psi_0(x)..psi_p(x) into out[0..p]. No support check.
  void values(double x, double* out) const noexcept;
  double value(int degree, double x) const;

 private:
  MeasureFamily1D fam_;
  int max_degree_;
  std::vector<double> a_;
  std::vector<double> sqrt_b_;
};

/// Tensor-product orthonormal basis {Psi_nu : nu in S} over a product
/// measure. Column j corresponds to index_set()[j].
class OrthoBasis {
 public:
  OrthoBasis(TensorMeasure measure, IndexSet index_set);

  const TensorMeasure& measure() const noexcept { return measure_; }
  const IndexSet& index_set() const noexcept { return set_; }
  int dim() const noexcept { return set_.dim(); }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(set_.size()); }

  /// (Psi_nu(x))_{nu in S}. Throws DomainError on dimension mismatch or a
  /// coordinate outside its factor's support.
  Eigen::VectorXd eval_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void eval_row(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;

  /// Rows of `points` are evaluation points; returns the m x n matrix of
  /// basis values.
  Eigen::MatrixXd eval_matrix(const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// Values of sum_j c_j Psi_j at each row of `points`.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                           const Eigen::Ref<const Eigen::MatrixXd>& points) const;

 private:
  TensorMeasure measure_;
  IndexSet set_;
  std::vector<UnivariateBasis> uni_;
};

inline Eigen::VectorXd eval_basis_row(const OrthoBasis& basis,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  return basis.eval_row(x);
}

/// Gram matrix of the basis under a q_per_dim^d tensor Gauss rule; equals
/// the identity whenever q_per_dim exceeds the largest degree.
Eigen::MatrixXd gram_matrix(const OrthoBasis& basis, int q_per_dim);

}  // namespace wls
