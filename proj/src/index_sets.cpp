#include "wls/index_sets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wls/errors.hpp"

namespace wls {

bool graded_less(const MultiIndex& a, const MultiIndex& b) noexcept {
  const long sa = std::accumulate(a.begin(), a.end(), 0L);
  const long sb = std::accumulate(b.begin(), b.end(), 0L);
  if (sa != sb) return sa < sb;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

IndexSet::IndexSet(int dim, std::vector<MultiIndex> indices)
    : dim_(dim), indices_(std::move(indices)) {
  if (dim_ < 1) throw DomainError("index set dimension must be >= 1");
  if (indices_.empty()) throw DomainError("index set must not be empty");
  for (const auto& nu : indices_) {
    if (static_cast<int>(nu.size()) != dim_) throw DomainError("multi-index has wrong length");
    for (int v : nu)
      if (v < 0) throw DomainError("multi-index entries must be nonnegative");
  }
  std::sort(indices_.begin(), indices_.end(), graded_less);
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw DomainError("index set contains duplicates");
  }
}

std::optional<std::size_t> IndexSet::position(const MultiIndex& nu) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), nu, graded_less);
  if (it == indices_.end() || *it != nu) return std::nullopt;
  return static_cast<std::size_t>(it - indices_.begin());
}

bool IndexSet::contains(const MultiIndex& nu) const {
  return static_cast<int>(nu.size()) == dim_ && position(nu).has_value();
}

int IndexSet::max_degree(int k) const {
  int m = 0;
  for (const auto& nu : indices_) m = std::max(m, nu[k]);
  return m;
}

int IndexSet::max_degree() const {
  int m = 0;
  for (int k = 0; k < dim_; ++k) m = std::max(m, max_degree(k));
  return m;
}

IndexSet IndexSet::truncated(std::size_t n) const {
  if (n == 0 || n > size()) throw DomainError("truncation size out of range");
  return IndexSet(dim_, std::vector<MultiIndex>(indices_.begin(), indices_.begin() + n));
}

namespace {

constexpr double kSlack = 1e-12;

// Enumerates by depth-first search; every constraint is monotone in each
// coordinate, so a branch is cut as soon as the partial index (with zeros in
// the remaining slots) violates it.
class Enumerator {
 public:
  Enumerator(IndexKind kind, int d, double p, std::vector<double> a, std::size_t cap)
      : kind_(kind), d_(d), p_(p), a_(std::move(a)), cap_(cap), nu_(d, 0) {}

  std::vector<MultiIndex> run() {
    recurse(0);
    return std::move(out_);
  }

 private:
  bool admissible() const {
    const double tol = kSlack * (1.0 + std::abs(p_));
    switch (kind_) {
      case IndexKind::TensorProduct: {
        double m = 0.0;
        for (int k = 0; k < d_; ++k) m = std::max(m, a_[k] * nu_[k]);
        return m <= p_ + tol;
      }
      case IndexKind::TotalDegree: {
        double s = 0.0;
        for (int k = 0; k < d_; ++k) s += a_[k] * nu_[k];
        return s <= p_ + tol;
      }
      case IndexKind::HyperbolicCross: {
        double s = 0.0;  // log of the product
        for (int k = 0; k < d_; ++k) s += a_[k] * std::log1p(static_cast<double>(nu_[k]));
        return s <= std::log1p(p_) + kSlack;
      }
      case IndexKind::HyperbolicCrossSum: {
        double s = 0.0;
        for (int k = 0; k < d_; ++k) s += std::pow(nu_[k] + 1.0, a_[k]);
        return s <= p_ + 1.0 + tol;
      }
    }
    return false;
  }

  void recurse(int k) {
    if (k == d_) {
      if (out_.size() >= cap_) {
        throw SizeError("index set exceeds cap of " + std::to_string(cap_) + " elements");
      }
      out_.push_back(nu_);
      return;
    }
    for (nu_[k] = 0;; ++nu_[k]) {
      if (!admissible()) break;
      recurse(k + 1);
    }
    nu_[k] = 0;
  }

  IndexKind kind_;
  int d_;
  double p_;
  std::vector<double> a_;
  std::size_t cap_;
  MultiIndex nu_;
  std::vector<MultiIndex> out_;
};

}  // namespace

IndexSet build_index_set(IndexKind kind, int d, double p, std::span<const double> anisotropy,
                         std::size_t cap) {
  if (d < 1) throw DomainError("index set dimension must be >= 1");
  if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("index set order must be finite and >= 0");
  std::vector<double> a(anisotropy.begin(), anisotropy.end());
  if (a.empty()) a.assign(d, 1.0);
  if (static_cast<int>(a.size()) != d) throw DomainError("anisotropy length must equal d");
  for (double ak : a)
    if (!(ak > 0.0) || !std::isfinite(ak)) throw DomainError("anisotropy must be positive");

  auto idx = Enumerator(kind, d, p, std::move(a), cap).run();
  if (idx.empty()) {
    // only reachable for the sum-form hyperbolic cross with p < d - 1
    throw DomainError("index set is empty for this order");
  }
  return IndexSet(d, std::move(idx));
}

IndexSet build_index_set(const IndexSetSpec& spec, int d, std::size_t cap) {
  return build_index_set(spec.kind, d, spec.order, spec.anisotropy, cap);
}

IndexSet lower_set_of_size(IndexKind kind, int d, std::size_t n) {
  if (n == 0) throw DomainError("index set size must be >= 1");
  for (int p = 0;; ++p) {
    auto s = build_index_set(kind, d, static_cast<double>(p));
    if (s.size() >= n) return s.truncated(n);
  }
}

bool is_lower(const IndexSet& s) {
  for (const auto& nu : s) {
    MultiIndex mu = nu;
    // checking the immediate predecessors suffices by induction on |nu|
    for (int k = 0; k < s.dim(); ++k) {
      if (nu[k] == 0) continue;
      --mu[k];
      const bool ok = s.contains(mu);
      ++mu[k];
      if (!ok) return false;
    }
  }
  return true;
}

namespace {

double to_real(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number '" + std::string(s) + "' in index set spec");
  }
  return v;
}

}  // namespace

IndexKind parse_index_kind(std::string_view s) {
  if (s == "tp") return IndexKind::TensorProduct;
  if (s == "td") return IndexKind::TotalDegree;
  if (s == "hc") return IndexKind::HyperbolicCross;
  if (s == "hcsum") return IndexKind::HyperbolicCrossSum;
  throw std::invalid_argument("unknown index set kind '" + std::string(s) + "'");
}

std::string to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::TensorProduct: return "tp";
    case IndexKind::TotalDegree: return "td";
    case IndexKind::HyperbolicCross: return "hc";
    case IndexKind::HyperbolicCrossSum: return "hcsum";
  }
  return "?";
}

IndexSetSpec IndexSetSpec::parse(std::string_view spec) {
  IndexSetSpec out;
  const auto c1 = spec.find(':');
  if (c1 == std::string_view::npos) throw std::invalid_argument("index set spec needs kind:order");
  out.kind = parse_index_kind(spec.substr(0, c1));
  auto rest = spec.substr(c1 + 1);
  const auto c2 = rest.find(':');
  out.order = to_real(rest.substr(0, c2));
  if (c2 != std::string_view::npos) {
    auto an = rest.substr(c2 + 1);
    if (!an.starts_with("a=")) throw std::invalid_argument("expected ':a=a1,a2,...'");
    an.remove_prefix(2);
    while (!an.empty()) {
      const auto comma = an.find(',');
      out.anisotropy.push_back(to_real(an.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      an.remove_prefix(comma + 1);
    }
  }
  return out;
}

std::string IndexSetSpec::name() const {
  std::string s = to_string(kind);
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), order);
  s += ':';
  s.append(buf, ptr);
  if (!anisotropy.empty()) {
    s += ":a=";
    for (std::size_t k = 0; k < anisotropy.size(); ++k) {
      if (k) s += ',';
      auto [p2, e2] = std::to_chars(buf, buf + sizeof(buf), anisotropy[k]);
      s.append(buf, p2);
    }
  }
  return s;
}

}  // namespace wls
