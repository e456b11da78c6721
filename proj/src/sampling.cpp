#include "wls/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wls {

Strategy parse_strategy(std::string_view s) {
  if (s == "mc") return Strategy::MonteCarlo;
  if (s == "mixture") return Strategy::ChristoffelMixture;
  if (s == "per-basis") return Strategy::PerBasisInduced;
  if (s == "discrete") return Strategy::DiscreteGrid;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::MonteCarlo:
      return "mc";
    case Strategy::ChristoffelMixture:
      return "mixture";
    case Strategy::PerBasisInduced:
      return "per-basis";
    case Strategy::DiscreteGrid:
      return "discrete";
  }
  return "?";
}

SamplePlan sample_monte_carlo(const TensorMeasure& measure, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw DomainError("sample size must be >= 1");
  Rng rng(seed);
  SamplePlan plan;
  plan.points.resize(m, measure.dim());
  for (Eigen::Index i = 0; i < m; ++i) plan.points.row(i) = measure.sample(rng).transpose();
  plan.weights = Eigen::VectorXd::Ones(m);
  plan.strategy = Strategy::MonteCarlo;
  plan.seed = seed;
  plan.weight_spec = WeightSpec::monte_carlo();
  return plan;
}

double sample_induced_univariate(const MeasureFamily1D& fam, int degree, Rng& rng) {
  if (degree < 0) throw DomainError("induced degree must be >= 0");
  return induced_sampler(fam, degree).sample(rng);
}

namespace {

void draw_induced_point(const OrthoBasis& basis, std::size_t j, Rng& rng,
                        Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
  const auto& nu = basis.index_set()[j];
  const auto& f = basis.measure().factors;
  for (int k = 0; k < basis.dim(); ++k) out(k) = sample_induced_univariate(f[k], nu[k], rng);
}

void draw_rho_point(const OrthoBasis& basis, Rng& rng, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
  const auto& f = basis.measure().factors;
  for (int k = 0; k < basis.dim(); ++k) out(k) = sample_rho(f[k], rng);
}

void attach_weights(const OrthoBasis& basis, SamplePlan& plan) {
  const auto m = plan.size();
  plan.weights.resize(m);
  if (plan.weight_spec.kind == WeightKind::MonteCarlo) {
    plan.weights.setOnes();
    return;
  }
  const double n = static_cast<double>(basis.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double K = christoffel_K(basis, plan.points.row(i).transpose());
    plan.weights(i) = weight_from_christoffel(plan.weight_spec, K, n);
  }
}

}  // namespace

SamplePlan sample_christoffel_mixture(const OrthoBasis& basis, const WeightSpec& spec,
                                      Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw DomainError("sample size must be >= 1");
  Rng rng(seed);
  const double theta = spec.rho_fraction();
  const auto n = static_cast<std::size_t>(basis.size());
  SamplePlan plan;
  plan.points.resize(m, basis.dim());
  for (Eigen::Index i = 0; i < m; ++i) {
    if (theta > 0.0 && (theta >= 1.0 || rng.uniform() < theta)) {
      draw_rho_point(basis, rng, plan.points.row(i));
    } else {
      draw_induced_point(basis, rng.index(n), rng, plan.points.row(i));
    }
  }
  plan.strategy = Strategy::ChristoffelMixture;
  plan.seed = seed;
  plan.weight_spec = spec;
  attach_weights(basis, plan);
  return plan;
}

SamplePlan sample_per_basis(const OrthoBasis& basis, const WeightSpec& spec, Eigen::Index k,
                            std::uint64_t seed) {
  if (k < 1) throw DomainError("per-basis sampling needs k >= 1");
  Rng rng(seed);
  const double theta = spec.rho_fraction();
  const auto n = basis.size();
  SamplePlan plan;
  plan.points.resize(k * n, basis.dim());
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index r = 0; r < k; ++r, ++row) {
      if (theta > 0.0 && (theta >= 1.0 || rng.uniform() < theta)) {
        draw_rho_point(basis, rng, plan.points.row(row));
      } else {
        draw_induced_point(basis, static_cast<std::size_t>(j), rng, plan.points.row(row));
      }
    }
  }
  plan.strategy = Strategy::PerBasisInduced;
  plan.seed = seed;
  plan.weight_spec = spec;
  attach_weights(basis, plan);
  return plan;
}

Eigen::VectorXd DiscreteGrid::input_coefficients(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  // V P = Q R and V x = sqrt(K) Q c  =>  x = P R^{-1} sqrt(K) c
  const double sk = std::sqrt(static_cast<double>(size()));
  const Eigen::VectorXd z = R.triangularView<Eigen::Upper>().solve(sk * c);
  Eigen::VectorXd x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) x(permutation(i)) = z(i);
  return x;
}

DiscreteGrid build_discrete_grid(const Eigen::Ref<const Eigen::MatrixXd>& nodes,
                                 const BasisEvaluator& basis_eval, Eigen::Index n) {
  const Eigen::Index K = nodes.rows();
  if (K < n) throw DomainError("discrete grid needs at least n nodes");
  const Eigen::MatrixXd V = basis_eval(nodes);
  if (V.rows() != K || V.cols() != n) throw DomainError("basis evaluator returned wrong shape");
  if (!V.allFinite()) throw NumericalError("discrete grid: nonfinite basis values");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  qr.setThreshold(1e-10);
  if (qr.rank() < n) {
    throw RankError("discrete grid: numerical rank " + std::to_string(qr.rank()) + " < n = " +
                    std::to_string(n) + "; increase the number of grid nodes");
  }
  DiscreteGrid g;
  g.nodes = nodes;
  g.Q = qr.householderQ() * Eigen::MatrixXd::Identity(K, n);
  g.R = qr.matrixR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
  g.permutation = qr.colsPermutation().indices();
  g.leverage = g.Q.rowwise().squaredNorm();
  g.christoffel = static_cast<double>(K) * g.leverage;
  return g;
}

DiscreteGrid build_discrete_grid(const OrthoBasis& basis, Eigen::Index K, std::uint64_t seed) {
  const auto nodes = sample_monte_carlo(basis.measure(), K, seed).points;
  return build_discrete_grid(
      nodes, [&](const Eigen::MatrixXd& z) { return basis.eval_matrix(z); }, basis.size());
}

SamplePlan sample_discrete_leverage(const DiscreteGrid& grid, const WeightSpec& spec,
                                    Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw DomainError("sample size must be >= 1");
  const Eigen::Index K = grid.size();
  const double n = static_cast<double>(grid.dim_space());
  const double theta = spec.rho_fraction();

  std::vector<double> cum(static_cast<std::size_t>(K));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < K; ++i) {
    acc += theta + (1.0 - theta) * grid.christoffel(i) / n;
    cum[i] = acc;
  }
  Rng rng(seed);
  SamplePlan plan;
  plan.points.resize(m, grid.nodes.cols());
  plan.weights.resize(m);
  plan.grid_indices.resize(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto i = std::min<Eigen::Index>(it - cum.begin(), K - 1);
    plan.grid_indices[r] = i;
    plan.points.row(r) = grid.nodes.row(i);
    plan.weights(r) = weight_from_christoffel(spec, grid.christoffel(i), n);
  }
  plan.strategy = Strategy::DiscreteGrid;
  plan.seed = seed;
  plan.weight_spec = spec;
  return plan;
}

SamplePlan draw_plan(const OrthoBasis& basis, Strategy strategy, const WeightSpec& spec,
                     Eigen::Index m, std::uint64_t seed, Eigen::Index grid_size) {
  switch (strategy) {
    case Strategy::MonteCarlo:
      return sample_monte_carlo(basis.measure(), m, seed);
    case Strategy::ChristoffelMixture:
      return sample_christoffel_mixture(basis, spec, m, seed);
    case Strategy::PerBasisInduced: {
      const auto n = basis.size();
      return sample_per_basis(basis, spec, (m + n - 1) / n, seed);
    }
    case Strategy::DiscreteGrid: {
      const Eigen::Index K = grid_size > 0 ? grid_size : std::max<Eigen::Index>(10000, 20 * basis.size());
      const auto grid = build_discrete_grid(basis, K, mix_seed(seed, 0xD15C));
      return sample_discrete_leverage(grid, spec, m, seed);
    }
  }
  throw std::invalid_argument("unknown strategy");
}

}  // namespace wls
