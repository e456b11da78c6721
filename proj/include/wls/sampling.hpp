#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "wls/christoffel.hpp"
#include "wls/induced.hpp"
#include "wls/measures.hpp"
#include "wls/orthopoly.hpp"

namespace wls {

enum class Strategy { MonteCarlo, ChristoffelMixture, PerBasisInduced, DiscreteGrid };

/// "mc", "mixture", "per-basis", "discrete".
Strategy parse_strategy(std::string_view s);
std::string to_string(Strategy s);

/// m points (rows of `points`) with their weights w(x_i).
struct SamplePlan {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
  Strategy strategy = Strategy::MonteCarlo;
  std::uint64_t seed = 0;
  WeightSpec weight_spec = WeightSpec::monte_carlo();
  /// Row indices into the grid for DiscreteGrid plans; empty otherwise.
  std::vector<Eigen::Index> grid_indices;

  Eigen::Index size() const noexcept { return points.rows(); }
  int dim() const noexcept { return static_cast<int>(points.cols()); }
};

/// m i.i.d. draws from rho, all weights one.
SamplePlan sample_monte_carlo(const TensorMeasure& measure, Eigen::Index m, std::uint64_t seed);

/// One draw from psi_j^2 d rho.
double sample_induced_univariate(const MeasureFamily1D& fam, int degree, Rng& rng);

/// i.i.d. draws from theta rho + (1 - theta)(K/n) rho, with theta the
/// weight's rho fraction (0 for the optimal weight, so the law is (K/n) rho).
/// The (K/n) rho part picks a basis index uniformly and draws each
/// coordinate from the univariate induced measure of that index's degree.
SamplePlan sample_christoffel_mixture(const OrthoBasis& basis, const WeightSpec& spec,
                                      Eigen::Index m, std::uint64_t seed);

/// k draws per basis function, in basis order, so m = k n. Block j uses
/// theta rho + (1 - theta)|Psi_j|^2 rho; averaged over blocks this is the
/// same mixture as above.
SamplePlan sample_per_basis(const OrthoBasis& basis, const WeightSpec& spec, Eigen::Index k,
                            std::uint64_t seed);

/// Orthonormalized finite grid for leverage-score sampling.
///
/// Q has orthonormal columns in the Euclidean sense; sqrt(K) Q is
/// orthonormal under the uniform discrete measure on the nodes. The
/// leverage scores are the squared row norms of Q (they sum to n) and the
/// discrete Christoffel values are K times those.
struct DiscreteGrid {
  Eigen::MatrixXd nodes;        ///< K x d
  Eigen::MatrixXd Q;            ///< K x n
  Eigen::MatrixXd R;            ///< n x n, upper triangular
  Eigen::VectorXi permutation;  ///< column pivoting: V P = Q R
  Eigen::VectorXd leverage;
  Eigen::VectorXd christoffel;

  Eigen::Index size() const noexcept { return nodes.rows(); }
  Eigen::Index dim_space() const noexcept { return Q.cols(); }
  /// Maps coefficients in the discrete-orthonormal basis sqrt(K) Q back to
  /// coefficients in the input basis.
  Eigen::VectorXd input_coefficients(const Eigen::Ref<const Eigen::VectorXd>& c) const;
};

using BasisEvaluator = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Throws RankError when the evaluated K x n matrix has numerical rank
/// below n at relative tolerance 1e-10.
DiscreteGrid build_discrete_grid(const Eigen::Ref<const Eigen::MatrixXd>& nodes,
                                 const BasisEvaluator& basis_eval, Eigen::Index n);

/// Grid of K i.i.d. draws from the basis measure.
DiscreteGrid build_discrete_grid(const OrthoBasis& basis, Eigen::Index K, std::uint64_t seed);

/// i.i.d. node draws with P(i) = (theta + (1 - theta) Kbar_i / n) / K.
SamplePlan sample_discrete_leverage(const DiscreteGrid& grid, const WeightSpec& spec,
                                    Eigen::Index m, std::uint64_t seed);

/// Dispatches on strategy; per-basis rounds m up to a multiple of n and the
/// discrete strategy builds a grid of `grid_size` nodes (0: max(10^4, 20 n)).
SamplePlan draw_plan(const OrthoBasis& basis, Strategy strategy, const WeightSpec& spec,
                     Eigen::Index m, std::uint64_t seed, Eigen::Index grid_size = 0);

}  // namespace wls
