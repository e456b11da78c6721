#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "oracles.hpp"
#include "wls/errors.hpp"
#include "wls/index_sets.hpp"

using namespace wls;

namespace {

// Every nu in the box [0, P]^d with pred(nu), in no particular order.
std::set<MultiIndex> brute_force(int d, int P, const std::function<bool(const MultiIndex&)>& pred) {
  std::set<MultiIndex> out;
  MultiIndex nu(d, 0);
  while (true) {
    if (pred(nu)) out.insert(nu);
    int k = 0;
    while (k < d && ++nu[k] > P) nu[k++] = 0;
    if (k == d) break;
  }
  return out;
}

std::set<MultiIndex> as_set(const IndexSet& s) { return {s.begin(), s.end()}; }

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("total degree d=2 p=2 in graded order") {
  const auto s = build_index_set(IndexKind::TotalDegree, 2, 2);
  const std::vector<MultiIndex> want{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  CHECK(s.indices() == want);
}

TEST_CASE("hyperbolic cross d=2 p=3") {
  const auto s = build_index_set(IndexKind::HyperbolicCross, 2, 3);
  const std::set<MultiIndex> want{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}, {1, 1}, {0, 2}, {0, 3}};
  CHECK(s.size() == 8);
  CHECK(as_set(s) == want);
}

TEST_CASE("tensor product d=3 p=0 is the zero index") {
  const auto s = build_index_set(IndexKind::TensorProduct, 3, 0);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == MultiIndex{0, 0, 0});
}

TEST_CASE("hcsum is the literal shifted-simplex form") {
  // sum (nu_k + 1) <= p + 1 in d=2, p=3: nu_1 + nu_2 <= 2
  const auto s = build_index_set(IndexKind::HyperbolicCrossSum, 2, 3);
  CHECK(as_set(s) == as_set(build_index_set(IndexKind::TotalDegree, 2, 2)));
}

TEST_CASE("cardinalities against direct enumeration, d <= 4, p <= 6") {
  for (int d = 1; d <= 4; ++d) {
    for (int p = 0; p <= 6; ++p) {
      INFO("d=" << d << " p=" << p);
      const auto tp = build_index_set(IndexKind::TensorProduct, d, p);
      const auto td = build_index_set(IndexKind::TotalDegree, d, p);
      const auto hc = build_index_set(IndexKind::HyperbolicCross, d, p);
      CHECK(static_cast<long long>(tp.size()) == static_cast<long long>(std::pow(p + 1, d)));
      CHECK(static_cast<long long>(td.size()) == binom(p + d, d));
      CHECK(as_set(tp) == brute_force(d, p, [&](const MultiIndex& nu) {
              return *std::max_element(nu.begin(), nu.end()) <= p;
            }));
      CHECK(as_set(td) == brute_force(d, p, [&](const MultiIndex& nu) {
              int s = 0;
              for (int v : nu) s += v;
              return s <= p;
            }));
      CHECK(as_set(hc) == brute_force(d, p, [&](const MultiIndex& nu) {
              long long prod = 1;
              for (int v : nu) prod *= v + 1;
              return prod <= p + 1;
            }));
    }
  }
}

TEST_CASE("anisotropic sets match their defining inequalities") {
  const std::vector<double> a{1.0, 2.5};
  const double p = 5.5;
  const auto td = build_index_set(IndexKind::TotalDegree, 2, p, a);
  CHECK(as_set(td) == brute_force(2, 6, [&](const MultiIndex& nu) {
          return a[0] * nu[0] + a[1] * nu[1] <= p;
        }));
  const auto tp = build_index_set(IndexKind::TensorProduct, 2, p, a);
  CHECK(as_set(tp) == brute_force(2, 6, [&](const MultiIndex& nu) {
          return std::max(a[0] * nu[0], a[1] * nu[1]) <= p;
        }));
  const auto hc = build_index_set(IndexKind::HyperbolicCross, 2, p, a);
  CHECK(as_set(hc) == brute_force(2, 7, [&](const MultiIndex& nu) {
          return std::pow(nu[0] + 1.0, a[0]) * std::pow(nu[1] + 1.0, a[1]) <= p + 1;
        }));
}

TEST_CASE("explicit unit anisotropy is bit-identical to isotropic") {
  for (auto kind : {IndexKind::TensorProduct, IndexKind::TotalDegree, IndexKind::HyperbolicCross}) {
    const std::vector<double> ones(3, 1.0);
    CHECK(build_index_set(kind, 3, 4, ones) == build_index_set(kind, 3, 4));
  }
}

TEST_CASE("is_lower") {
  CHECK(is_lower(IndexSet(2, {{0, 0}, {1, 0}, {0, 1}})));
  CHECK_FALSE(is_lower(IndexSet(2, {{0, 0}, {2, 0}})));
  CHECK_FALSE(is_lower(IndexSet(2, {{0, 0}, {1, 0}, {1, 1}})));
  CHECK_FALSE(is_lower(IndexSet(1, {{1}})));
}

TEST_CASE("property: built sets are lower and nested in p") {
  oracle::for_all(
      77, 50,
      [](std::mt19937_64& eng) {
        const auto kind = static_cast<IndexKind>(oracle::int_in(eng, 0, 2));
        const int d = oracle::int_in(eng, 1, 4);
        const double p = oracle::uniform_in(eng, 0.0, 8.0);
        std::vector<double> a(d);
        for (auto& v : a) v = oracle::uniform_in(eng, 0.5, 3.0);
        return std::tuple{kind, d, p, a};
      },
      [](const auto& c, int) {
        const auto& [kind, d, p, a] = c;
        INFO("kind=" << to_string(kind) << " d=" << d << " p=" << p);
        const auto s = build_index_set(kind, d, p, a);
        CHECK(is_lower(s));
        const auto bigger = build_index_set(kind, d, p + 1.0, a);
        for (const auto& nu : s) CHECK(bigger.contains(nu));
        CHECK(std::is_sorted(s.begin(), s.end(), graded_less));
      });
}

TEST_CASE("graded order and position lookup") {
  const auto s = build_index_set(IndexKind::TotalDegree, 3, 3);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.position(s[i]) == i);
    if (i) CHECK(graded_less(s[i - 1], s[i]));
  }
  CHECK_FALSE(s.position({4, 0, 0}).has_value());
  CHECK(s.max_degree() == 3);
  CHECK(s.max_degree(1) == 3);
  // an explicitly listed set is sorted on construction
  const IndexSet t(2, {{0, 2}, {1, 0}, {0, 0}});
  CHECK(t[0] == MultiIndex{0, 0});
  CHECK(t[1] == MultiIndex{1, 0});
}

TEST_CASE("lower sets of a prescribed size") {
  oracle::for_all(
      5, 40,
      [](std::mt19937_64& eng) {
        return std::tuple{static_cast<IndexKind>(oracle::int_in(eng, 0, 2)), oracle::int_in(eng, 1, 4),
                          static_cast<std::size_t>(oracle::int_in(eng, 1, 120))};
      },
      [](const auto& c, int) {
        const auto& [kind, d, n] = c;
        const auto s = lower_set_of_size(kind, d, n);
        CHECK(s.size() == n);
        CHECK(is_lower(s));
      });
  CHECK_THROWS_AS(lower_set_of_size(IndexKind::TotalDegree, 2, 0), DomainError);
}

TEST_CASE("invalid sets and specs") {
  CHECK_THROWS(IndexSet(2, {}));
  CHECK_THROWS(IndexSet(2, {{0, 0}, {0, 0}}));
  CHECK_THROWS(IndexSet(2, {{0, 0, 0}}));
  CHECK_THROWS(IndexSet(2, {{0, -1}}));
  CHECK_THROWS(build_index_set(IndexKind::TotalDegree, 0, 2));
  CHECK_THROWS(build_index_set(IndexKind::TotalDegree, 2, -1));
  CHECK_THROWS(build_index_set(IndexKind::TotalDegree, 2, 2, std::vector<double>{1.0}));
  CHECK_THROWS(build_index_set(IndexKind::TotalDegree, 2, 2, std::vector<double>{1.0, 0.0}));
  CHECK_THROWS_AS(build_index_set(IndexKind::TensorProduct, 8, 9, {}, 1000), SizeError);
  CHECK_THROWS_AS(IndexSetSpec::parse("td"), std::invalid_argument);
  CHECK_THROWS_AS(IndexSetSpec::parse("xx:3"), std::invalid_argument);
  CHECK_THROWS_AS(IndexSetSpec::parse("td:3:b=1"), std::invalid_argument);
}

TEST_CASE("spec strings") {
  const auto s = IndexSetSpec::parse("hc:8:a=1,2");
  CHECK(s.kind == IndexKind::HyperbolicCross);
  CHECK(s.order == 8.0);
  CHECK(s.anisotropy == std::vector<double>{1.0, 2.0});
  CHECK(s.name() == "hc:8:a=1,2");
  CHECK(IndexSetSpec::parse("td:2.5").name() == "td:2.5");
  CHECK(build_index_set(IndexSetSpec::parse("td:2"), 2).size() == 6);
  CHECK(parse_index_kind("hcsum") == IndexKind::HyperbolicCrossSum);
}
