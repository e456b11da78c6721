#include "wls/christoffel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace wls {

WeightSpec WeightSpec::regularized(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("regularization theta must lie in (0,1)");
  return {WeightKind::Regularized, theta};
}

WeightSpec WeightSpec::parse(std::string_view s) {
  if (s == "mc") return monte_carlo();
  if (s == "opt") return optimal();
  if (s == "reg") return regularized(0.5);
  if (s.starts_with("reg:")) {
    double t = 0.0;
    const auto body = s.substr(4);
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), t);
    if (ec != std::errc() || ptr != body.data() + body.size()) {
      throw std::invalid_argument("bad theta in weight spec '" + std::string(s) + "'");
    }
    return regularized(t);
  }
  throw std::invalid_argument("unknown weight spec '" + std::string(s) + "'");
}

std::string WeightSpec::name() const {
  switch (kind) {
    case WeightKind::MonteCarlo:
      return "mc";
    case WeightKind::OptimalInverse:
      return "opt";
    case WeightKind::Regularized:
      break;
  }
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), theta);
  return "reg:" + std::string(buf, ptr);
}

double WeightSpec::rho_fraction() const noexcept {
  switch (kind) {
    case WeightKind::MonteCarlo:
      return 1.0;
    case WeightKind::OptimalInverse:
      return 0.0;
    case WeightKind::Regularized:
      return theta;
  }
  return 1.0;
}

double christoffel_K(const OrthoBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return basis.eval_row(x).squaredNorm();
}

double weight_from_christoffel(const WeightSpec& spec, double K, double n) {
  switch (spec.kind) {
    case WeightKind::MonteCarlo:
      return 1.0;
    case WeightKind::OptimalInverse:
      if (!(K > 0.0)) throw DomainError("optimal weight n/K(x) is singular where K(x) = 0");
      return n / K;
    case WeightKind::Regularized:
      return 1.0 / (spec.theta + (1.0 - spec.theta) * K / n);
  }
  return 1.0;
}

double weight(const OrthoBasis& basis, const WeightSpec& spec,
              const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (spec.kind == WeightKind::MonteCarlo) return 1.0;
  return weight_from_christoffel(spec, christoffel_K(basis, x), static_cast<double>(basis.size()));
}

namespace {

struct Axis {
  std::vector<double> pts;
  double lo;
  double hi;
};

Axis make_axis(const MeasureFamily1D& fam, int max_deg, int g) {
  Axis ax;
  ax.pts.resize(static_cast<std::size_t>(g));
  if (fam.bounded()) {
    ax.lo = -1.0;
    ax.hi = 1.0;
    for (int j = 0; j < g; ++j) ax.pts[j] = -std::cos(std::numbers::pi * j / (g - 1));
    ax.pts.front() = -1.0;
    ax.pts.back() = 1.0;
    return ax;
  }
  // Unbounded: only reached for weights with bounded w K, whose sup is
  // approached at infinity; search well beyond the largest Gauss node.
  const double edge = fam.kind() == FamilyKind::Gaussian ? std::sqrt(4.0 * max_deg + 2.0) + 8.0
                                                         : 4.0 * max_deg + 40.0;
  ax.lo = fam.kind() == FamilyKind::Gaussian ? -edge : 0.0;
  ax.hi = edge;
  const double mid = 0.5 * (ax.lo + ax.hi);
  const double half = 0.5 * (ax.hi - ax.lo);
  for (int j = 0; j < g; ++j) ax.pts[j] = mid - half * std::cos(std::numbers::pi * j / (g - 1));
  return ax;
}

}  // namespace

KappaResult kappa_w(const OrthoBasis& basis, const WeightSpec& spec, const KappaSearch& search) {
  const int d = basis.dim();
  const double n = static_cast<double>(basis.size());
  KappaResult res;
  if (spec.kind == WeightKind::MonteCarlo && !basis.measure().bounded() && basis.size() > 1) {
    // polynomials are unbounded on R and [0, inf)
    res.value = std::numeric_limits<double>::infinity();
    res.infinite = true;
    return res;
  }

  const int max_deg = basis.index_set().max_degree();
  const int g = search.points_per_dim > 0 ? search.points_per_dim : std::max(10 * (max_deg + 1), 64);
  if (g < 10 * max_deg) throw DomainError("kappa_w: grid resolution below 10x max degree");
  double total = 1.0;
  for (int k = 0; k < d; ++k) total *= g;
  if (total > static_cast<double>(search.max_grid_points)) {
    throw SizeError("kappa_w: search grid of " + std::to_string(g) + "^" + std::to_string(d) +
                    " points exceeds cap");
  }
  std::vector<Axis> axes;
  for (int k = 0; k < d; ++k) axes.push_back(make_axis(basis.measure().factors[k], max_deg, g));

  auto objective = [&](const Eigen::VectorXd& x) {
    const double K = christoffel_K(basis, x);
    return weight_from_christoffel(spec, K, n) * K;
  };

  std::vector<int> idx(d, 0), best_idx(d, 0);
  Eigen::VectorXd x(d);
  double best = -1.0;
  const auto npts = static_cast<long long>(total);
  for (long long p = 0; p < npts; ++p) {
    for (int k = 0; k < d; ++k) x(k) = axes[k].pts[idx[k]];
    const double v = objective(x);
    if (v > best) {
      best = v;
      best_idx = idx;
    }
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < g) break;
      idx[k] = 0;
    }
  }

  Eigen::VectorXd arg(d);
  for (int k = 0; k < d; ++k) arg(k) = axes[k].pts[best_idx[k]];

  // golden-section ascent along each coordinate within the neighbouring cells
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < search.polish_sweeps; ++sweep) {
    for (int k = 0; k < d; ++k) {
      const int j = best_idx[k];
      double a = axes[k].pts[std::max(j - 1, 0)];
      double b = axes[k].pts[std::min(j + 1, g - 1)];
      Eigen::VectorXd y = arg;
      auto f = [&](double t) {
        y(k) = t;
        return objective(y);
      };
      double c = b - invphi * (b - a);
      double e = a + invphi * (b - a);
      double fc = f(c), fe = f(e);
      for (int it = 0; it < 80 && (b - a) > 1e-14 * (1.0 + std::abs(a)); ++it) {
        if (fc >= fe) {
          b = e;
          e = c;
          fe = fc;
          c = b - invphi * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = e;
          fc = fe;
          e = a + invphi * (b - a);
          fe = f(e);
        }
      }
      for (double t : {a, b, 0.5 * (a + b)}) {
        const double v = f(t);
        if (v > best) {
          best = v;
          arg(k) = t;
        }
      }
    }
  }
  res.value = best;
  res.argmax = arg;
  return res;
}

bool kappa_lower_bound_check(const OrthoBasis& basis, const WeightSpec& spec,
                             const KappaSearch& search) {
  const double n = static_cast<double>(basis.size());
  const auto k = kappa_w(basis, spec, search);
  return k.value >= n - 1e-6 * n;
}

}  // namespace wls
