#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "wls/orthopoly.hpp"

using namespace wls;

namespace {

using Poly = std::vector<long double>;  // monomial coefficients, low first

long double horner(const Poly& p, long double x) {
  long double s = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
  return s;
}

// Orthonormal polynomials by modified Gram-Schmidt on the monomials, with
// every inner product done by adaptive quadrature. Two passes keep the
// result orthogonal to working precision.
std::vector<Poly> gram_schmidt(const MeasureFamily1D& f, int P) {
  auto dot = [&](const Poly& p, const Poly& q) {
    return static_cast<long double>(oracle::expect(f, [&](double x) {
      return static_cast<double>(horner(p, x) * horner(q, x));
    }));
  };
  std::vector<Poly> out;
  for (int k = 0; k <= P; ++k) {
    Poly p(k + 1, 0.0L);
    p[k] = 1;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : out) {
        const long double c = dot(p, q);
        for (std::size_t j = 0; j < q.size(); ++j) p[j] -= c * q[j];
      }
    }
    const long double nrm = std::sqrt(dot(p, p));
    for (auto& c : p) c /= nrm;
    // leading coefficient stays positive, matching the recurrence
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("worked values") {
  CHECK(eval_univariate(MeasureFamily1D::chebyshev_first(), 2, 1.0) ==
        doctest::Approx(std::numbers::sqrt2).epsilon(1e-14));
  CHECK(eval_univariate(MeasureFamily1D::gaussian(), 2, 0.0) ==
        doctest::Approx(-1.0 / std::numbers::sqrt2).epsilon(1e-14));
  // probability-normalized Legendre: psi_3(1) = sqrt(2*3+1)
  CHECK(eval_univariate(MeasureFamily1D::uniform(), 3, 1.0) == doctest::Approx(std::sqrt(7.0)).epsilon(1e-14));

  const OrthoBasis cheb(TensorMeasure(MeasureFamily1D::chebyshev_first(), 2),
                        build_index_set(IndexKind::TensorProduct, 2, 1));
  const auto row = cheb.eval_row(Eigen::Vector2d(1.0, 1.0));
  // graded order: (0,0), (1,0), (0,1), (1,1)
  CHECK(row(0) == doctest::Approx(1.0));
  CHECK(row(1) == doctest::Approx(std::numbers::sqrt2));
  CHECK(row(2) == doctest::Approx(std::numbers::sqrt2));
  CHECK(row(3) == doctest::Approx(2.0));

  const OrthoBasis leg(TensorMeasure(MeasureFamily1D::uniform(), 1),
                       build_index_set(IndexKind::TotalDegree, 1, 2));
  const auto r = leg.eval_row(Eigen::VectorXd::Zero(1));
  CHECK(r(0) == doctest::Approx(1.0));
  CHECK(r(1) == doctest::Approx(0.0).scale(1.0));
  CHECK(r(2) == doctest::Approx(-std::sqrt(5.0) / 2).epsilon(1e-14));
}

TEST_CASE("recurrence values agree with classical closed forms up to degree 100") {
  for (const auto& f : oracle::all_families()) {
    INFO(f.name());
    const bool unbounded = f.kind() != FamilyKind::Jacobi;
    const int P = unbounded ? 40 : 100;
    const UnivariateBasis ub(f, P);
    std::vector<double> v(P + 1);
    const std::vector<double> xs = unbounded ? std::vector<double>{0.0, 0.4, 1.7, 3.1, 5.0}
                                             : std::vector<double>{-1.0, -0.93, -0.2, 0.0, 0.61, 0.999, 1.0};
    for (double x : xs) {
      if (!f.contains(x)) continue;
      ub.values(x, v.data());
      for (int k = 0; k <= P; ++k) {
        INFO("k=" << k << " x=" << x);
        const double ref = oracle::psi(f, k, x);
        // measured against the scale of the family at that point, not the
        // value, since psi_k(x) passes through zero
        const double scale = std::max(1.0, std::sqrt(static_cast<double>(k) + 1) *
                                               std::max(std::abs(ref), 1.0));
        CHECK(std::abs(v[k] - ref) <= 1e-11 * scale);
      }
    }
  }
}

TEST_CASE("recurrence agrees with Gram-Schmidt on monomials, degree <= 20") {
  for (const auto& f : oracle::all_families()) {
    INFO(f.name());
    const bool unbounded = f.kind() != FamilyKind::Jacobi;
    // monomial conditioning limits how far the oracle can be trusted
    const int P = unbounded ? 12 : 20;
    const auto gs = gram_schmidt(f, P);
    const std::vector<double> xs = unbounded ? std::vector<double>{0.1, 0.9, 2.3} : std::vector<double>{-0.8, 0.05, 0.7};
    for (int k = 0; k <= P; ++k) {
      for (double x : xs) {
        if (!f.contains(x)) continue;
        INFO("k=" << k << " x=" << x);
        CHECK(eval_univariate(f, k, x) ==
              doctest::Approx(static_cast<double>(horner(gs[k], x))).epsilon(1e-7).scale(1.0));
      }
    }
  }
}

TEST_CASE("long double evaluation tracks double") {
  const auto f = MeasureFamily1D::jacobi(2.0, 0.0);
  for (int k : {0, 5, 50}) {
    const long double hi = eval_univariate<long double>(f, k, 0.3L);
    CHECK(eval_univariate(f, k, 0.3) == doctest::Approx(static_cast<double>(hi)).epsilon(1e-12));
  }
}

TEST_CASE("Gram matrix is the identity, d <= 3, n <= 200") {
  for (const auto& f : oracle::all_families()) {
    for (int d = 1; d <= 3; ++d) {
      const std::size_t n = d == 1 ? 60 : (d == 2 ? 200 : 120);
      const auto set = lower_set_of_size(IndexKind::TotalDegree, d, n);
      const bool unbounded = f.kind() != FamilyKind::Jacobi;
      if (unbounded && set.max_degree() > 40) continue;
      INFO(f.name() << " d=" << d);
      const OrthoBasis b(TensorMeasure(f, d), set);
      const auto G = gram_matrix(b, set.max_degree() + 1);
      const double tol = d == 1 ? 1e-12 : 1e-10;
      CHECK((G - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() <= tol);
    }
  }
}

TEST_CASE("Parseval: projecting an expansion recovers its coefficients") {
  oracle::for_all(
      31, 15,
      [](std::mt19937_64& eng) {
        const auto fams = oracle::all_families();
        const auto f = fams[oracle::int_in(eng, 0, static_cast<int>(fams.size()) - 1)];
        const int d = oracle::int_in(eng, 1, 3);
        const int p = oracle::int_in(eng, 0, d == 1 ? 15 : 5);
        return std::tuple{f, d, p, static_cast<std::uint64_t>(eng())};
      },
      [](const auto& c, int) {
        const auto& [f, d, p, seed] = c;
        INFO(f.name() << " d=" << d << " p=" << p);
        const OrthoBasis b(TensorMeasure(f, d), build_index_set(IndexKind::TotalDegree, d, p));
        std::mt19937_64 eng(seed);
        Eigen::VectorXd coef(b.size());
        for (auto& v : coef) v = oracle::uniform_in(eng, -1.0, 1.0);
        const auto rule = tensor_gauss_rule(b.measure(), p + 2);
        const Eigen::VectorXd vals = b.evaluate(coef, rule.nodes);
        const Eigen::VectorXd proj = b.eval_matrix(rule.nodes).transpose() * rule.weights.asDiagonal() * vals;
        CHECK((proj - coef).cwiseAbs().maxCoeff() <= 1e-11);
        CHECK(rule.weights.dot(vals.cwiseAbs2()) == doctest::Approx(coef.squaredNorm()).epsilon(1e-11));
      });
}

TEST_CASE("evaluation errors") {
  const auto leg = MeasureFamily1D::uniform();
  CHECK_THROWS_AS(eval_univariate(leg, -1, 0.0), DomainError);
  CHECK_THROWS_AS(eval_univariate(leg, kMaxPolyDegree + 1, 0.0), DomainError);
  CHECK_THROWS_AS(eval_univariate(leg, 2, 1.5), DomainError);
  CHECK_THROWS_AS(eval_univariate(MeasureFamily1D::exponential(), 2, -0.1), DomainError);
  const OrthoBasis b(TensorMeasure(leg, 2), build_index_set(IndexKind::TotalDegree, 2, 2));
  CHECK_THROWS_AS(b.eval_row(Eigen::Vector3d::Zero()), DomainError);
  CHECK_THROWS_AS(b.eval_row(Eigen::Vector2d(0.0, 2.0)), DomainError);
  CHECK_THROWS_AS(OrthoBasis(TensorMeasure(leg, 3), build_index_set(IndexKind::TotalDegree, 2, 2)), DomainError);
}
