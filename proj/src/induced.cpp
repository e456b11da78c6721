#include "wls/induced.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

namespace wls {

namespace {

double truncation_bound(const MeasureFamily1D& fam, const UnivariateBasis& poly, int degree,
                        double start, double step) {
  // walk outwards until the induced density is negligible and decreasing
  std::vector<double> v(static_cast<std::size_t>(degree) + 1);
  auto f = [&](double x) {
    poly.values(x, v.data());
    return v[degree] * v[degree] * density(fam, x);
  };
  double x = start;
  for (int it = 0; it < 10000; ++it, x += step) {
    const double fx = f(x);
    if (fx < 1e-24 && f(x + step) <= fx) return x;
  }
  throw NumericalError("induced sampler: could not truncate support for " + fam.name());
}

}  // namespace

InducedSampler::InducedSampler(const MeasureFamily1D& fam, int degree, int table_size)
    : fam_(fam), degree_(degree), poly_(fam, std::clamp(degree, 0, max_induced_degree(fam))) {
  if (degree < 0) throw DomainError("induced sampler: negative degree");
  if (degree > max_induced_degree(fam)) {
    throw DomainError("induced sampler: degree " + std::to_string(degree) + " above cap " +
                      std::to_string(max_induced_degree(fam)) + " for " + fam.name());
  }
  if (table_size < 16) throw DomainError("induced sampler: table too small");

  // a cell spans well under one oscillation of psi_j^2 at every allowed
  // degree, so a fixed moderate rule is exact to rounding
  const int q = std::min(degree + 12, 24);
  legendre_ = gauss_rule(MeasureFamily1D::uniform(), q);

  const auto n = static_cast<std::size_t>(table_size);
  grid_.resize(n + 1);
  if (fam.bounded()) {
    for (std::size_t k = 0; k <= n; ++k) {
      grid_[k] = -std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    grid_.front() = -1.0;
    grid_.back() = 1.0;
    left_ = gauss_rule(MeasureFamily1D::jacobi(0.0, fam.beta()), q);
    right_ = gauss_rule(MeasureFamily1D::jacobi(fam.alpha(), 0.0), q);
    left_norm_ = jacobi_normalizer(fam.alpha(), fam.beta()) / jacobi_normalizer(0.0, fam.beta());
    right_norm_ = jacobi_normalizer(fam.alpha(), fam.beta()) / jacobi_normalizer(fam.alpha(), 0.0);
  } else {
    const bool gaussian = fam.kind() == FamilyKind::Gaussian;
    const double start = gaussian ? std::sqrt(4.0 * degree + 2.0) + 1.0 : 4.0 * degree + 2.0;
    const double hi = truncation_bound(fam, poly_, degree, start, gaussian ? 0.25 : 1.0);
    const double lo = fam.kind() == FamilyKind::Gaussian ? -hi : 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      grid_[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
    }
  }

  cum_.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) cum_[k + 1] = cum_[k] + partial(k, grid_[k + 1]);
  total_ = cum_.back();
  if (!(std::abs(total_ - 1.0) < 1e-8)) {
    throw NumericalError("induced sampler: tabulated mass " + std::to_string(total_) + " for " +
                         fam.name() + " degree " + std::to_string(degree));
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(cum_[k + 1] >= cum_[k])) {
      throw NumericalError("induced sampler: non-monotone CDF table for " + fam.name());
    }
  }
}

double InducedSampler::integrand(double x) const {
  thread_local std::vector<double> v;
  v.resize(static_cast<std::size_t>(degree_) + 1);
  poly_.values(x, v.data());
  return v[degree_] * v[degree_] * wls::density(fam_, x);
}

double InducedSampler::density(double x) const {
  if (x < grid_.front() || x > grid_.back()) return 0.0;
  if (fam_.bounded() && ((x == -1.0 && fam_.beta() < 0.0) || (x == 1.0 && fam_.alpha() < 0.0))) {
    return std::numeric_limits<double>::infinity();
  }
  return integrand(x);
}

double InducedSampler::partial(std::size_t cell, double x) const {
  const double a = grid_[cell];
  if (x <= a) return 0.0;
  const std::size_t last = grid_.size() - 2;
  thread_local std::vector<double> v;
  v.resize(static_cast<std::size_t>(degree_) + 1);
  auto psi2 = [&](double t) {
    poly_.values(t, v.data());
    return v[degree_] * v[degree_];
  };

  if (fam_.bounded() && cell == 0) {
    // int_{-1}^{x} psi^2 c (1-t)^alpha (1+t)^beta dt with the (1+t)^beta
    // factor carried by a Gauss-Jacobi(0, beta) rule
    const double h = x + 1.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < left_.nodes.size(); ++i) {
      const double t = -1.0 + 0.5 * h * (1.0 + left_.nodes(i));
      s += left_.weights(i) * psi2(t) * std::pow(1.0 - t, fam_.alpha());
    }
    return left_norm_ * std::pow(0.5 * h, fam_.beta() + 1.0) * s;
  }
  if (fam_.bounded() && cell == last) {
    // complement: int_{x}^{1} with the (1-t)^alpha factor in the rule
    auto tail = [&](double from) {
      const double h = 1.0 - from;
      double s = 0.0;
      for (Eigen::Index i = 0; i < right_.nodes.size(); ++i) {
        const double t = from + 0.5 * h * (1.0 + right_.nodes(i));
        s += right_.weights(i) * psi2(t) * std::pow(1.0 + t, fam_.beta());
      }
      return right_norm_ * std::pow(0.5 * h, fam_.alpha() + 1.0) * s;
    };
    return tail(a) - tail(x);
  }
  const double half = 0.5 * (x - a);
  const double mid = 0.5 * (x + a);
  double s = 0.0;
  for (Eigen::Index i = 0; i < legendre_.nodes.size(); ++i) {
    s += legendre_.weights(i) * integrand(mid + half * legendre_.nodes(i));
  }
  // probability-normalized Legendre weights integrate against dx/2
  return 2.0 * half * s;
}

double InducedSampler::cdf(double x) const {
  if (x <= grid_.front()) return 0.0;
  if (x >= grid_.back()) return 1.0;
  auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const auto cell = static_cast<std::size_t>(it - grid_.begin()) - 1;
  return std::clamp((cum_[cell] + partial(cell, x)) / total_, 0.0, 1.0);
}

double InducedSampler::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile: u must lie in [0,1]");
  const double target = u * total_;
  auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  if (it == cum_.end()) return grid_.back();
  if (it == cum_.begin()) return grid_.front();
  const auto cell = static_cast<std::size_t>(it - cum_.begin()) - 1;
  double lo = grid_[cell];
  double hi = grid_[cell + 1];
  const double need = target - cum_[cell];
  const double mass = cum_[cell + 1] - cum_[cell];
  double x = mass > 0.0 ? lo + (hi - lo) * (need / mass) : 0.5 * (lo + hi);
  const double tol = 1e-14 * std::max(1.0, total_);
  for (int it2 = 0; it2 < 60; ++it2) {
    const double g = partial(cell, x) - need;
    if (std::abs(g) <= tol) break;
    if (g > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double fx = density(x);
    double next = (std::isfinite(fx) && fx > 0.0) ? x - g / fx : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

const InducedSampler& induced_sampler(const MeasureFamily1D& fam, int degree) {
  using Key = std::tuple<int, double, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::unique_ptr<const InducedSampler>> cache;
  const Key key{static_cast<int>(fam.kind()), fam.alpha(), fam.beta(), degree};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const int table = degree == 0 ? 2048 : 4096;
    it = cache.emplace(key, std::make_unique<const InducedSampler>(fam, degree, table)).first;
  }
  return *it->second;
}

}  // namespace wls
