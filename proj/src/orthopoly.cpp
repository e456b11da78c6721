#include "wls/orthopoly.hpp"

#include <cmath>

namespace wls {

UnivariateBasis::UnivariateBasis(const MeasureFamily1D& fam, int max_degree)
    : fam_(fam), max_degree_(max_degree) {
  if (max_degree < 0) throw DomainError("UnivariateBasis: negative degree");
  if (max_degree > kMaxPolyDegree) throw DomainError("UnivariateBasis: degree above cap");
  a_.resize(max_degree + 1);
  sqrt_b_.resize(max_degree + 2);
  for (int k = 0; k <= max_degree + 1; ++k) {
    const auto r = recurrence_coeffs(fam, k);
    if (k <= max_degree) a_[k] = r.a;
    sqrt_b_[k] = std::sqrt(r.b);
  }
}

void UnivariateBasis::values(double x, double* out) const noexcept {
  out[0] = 1.0;
  double prev = 0.0;
  for (int k = 0; k < max_degree_; ++k) {
    const double sb = k == 0 ? 0.0 : sqrt_b_[k];
    out[k + 1] = ((x - a_[k]) * out[k] - sb * prev) / sqrt_b_[k + 1];
    prev = out[k];
  }
}

double UnivariateBasis::value(int degree, double x) const {
  if (degree < 0 || degree > max_degree_) throw DomainError("UnivariateBasis: degree out of range");
  std::vector<double> v(static_cast<std::size_t>(max_degree_) + 1);
  values(x, v.data());
  return v[degree];
}

OrthoBasis::OrthoBasis(TensorMeasure measure, IndexSet index_set)
    : measure_(std::move(measure)), set_(std::move(index_set)) {
  if (measure_.dim() != set_.dim()) {
    throw DomainError("OrthoBasis: measure has dimension " + std::to_string(measure_.dim()) +
                      " but index set has " + std::to_string(set_.dim()));
  }
  uni_.reserve(measure_.dim());
  for (int k = 0; k < measure_.dim(); ++k) uni_.emplace_back(measure_.factors[k], set_.max_degree(k));
}

void OrthoBasis::eval_row(const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::VectorXd> out) const {
  const int d = dim();
  if (x.size() != d) {
    throw DomainError("eval_row: point has dimension " + std::to_string(x.size()) +
                      ", basis has " + std::to_string(d));
  }
  // per-coordinate tables psi_0..psi_{p_k}
  thread_local std::vector<double> buf;
  thread_local std::vector<std::size_t> offs;
  offs.resize(d + 1);
  offs[0] = 0;
  for (int k = 0; k < d; ++k) offs[k + 1] = offs[k] + uni_[k].max_degree() + 1;
  buf.resize(offs[d]);
  for (int k = 0; k < d; ++k) {
    if (!measure_.factors[k].contains(x(k))) {
      throw DomainError("eval_row: coordinate " + std::to_string(k) + " = " +
                        std::to_string(x(k)) + " outside support of " +
                        measure_.factors[k].name());
    }
    uni_[k].values(x(k), buf.data() + offs[k]);
  }
  const auto n = size();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& nu = set_[static_cast<std::size_t>(j)];
    double p = 1.0;
    for (int k = 0; k < d; ++k) p *= buf[offs[k] + nu[k]];
    out(j) = p;
  }
}

Eigen::VectorXd OrthoBasis::eval_row(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(size());
  eval_row(x, out);
  return out;
}

Eigen::MatrixXd OrthoBasis::eval_matrix(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  Eigen::MatrixXd V(points.rows(), size());
  Eigen::VectorXd row(size());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    eval_row(points.row(i).transpose(), row);
    V.row(i) = row.transpose();
  }
  return V;
}

Eigen::VectorXd OrthoBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                     const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  if (coeffs.size() != size()) throw DomainError("evaluate: coefficient length mismatch");
  Eigen::VectorXd out(points.rows());
  Eigen::VectorXd row(size());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    eval_row(points.row(i).transpose(), row);
    out(i) = row.dot(coeffs);
  }
  return out;
}

Eigen::MatrixXd gram_matrix(const OrthoBasis& basis, int q_per_dim) {
  if (q_per_dim < basis.index_set().max_degree() + 1) {
    throw DomainError("gram_matrix: q_per_dim must be at least max degree + 1");
  }
  const auto rule = tensor_gauss_rule(basis.measure(), q_per_dim);
  const Eigen::MatrixXd V = basis.eval_matrix(rule.nodes);
  return V.transpose() * rule.weights.asDiagonal() * V;
}

}  // namespace wls
