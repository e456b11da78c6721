#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wls {

/// nu = (nu_1, ..., nu_d), nonnegative.
using MultiIndex = std::vector<int>;

/// Graded order: total degree first, then lexicographically descending, so
/// that in 2D degree-2 indices come out as (2,0), (1,1), (0,2).
bool graded_less(const MultiIndex& a, const MultiIndex& b) noexcept;

enum class IndexKind {
  TensorProduct,     ///< max_k a_k nu_k <= p
  TotalDegree,       ///< sum_k a_k nu_k <= p
  HyperbolicCross,   ///< prod_k (nu_k + 1)^{a_k} <= p + 1
  HyperbolicCrossSum ///< sum_k (nu_k + 1)^{a_k} <= p + 1 (literal sum form, compatibility only)
};

/// "tp", "td", "hc" or "hcsum".
IndexKind parse_index_kind(std::string_view s);
std::string to_string(IndexKind kind);

/// Finite, duplicate-free set of d-dimensional multi-indices kept in graded
/// order. The position of an index in this order is its basis column.
class IndexSet {
 public:
  /// Sorts into graded order; throws on duplicates, wrong lengths, negative
  /// entries or an empty list.
  IndexSet(int dim, std::vector<MultiIndex> indices);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return indices_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }

  bool contains(const MultiIndex& nu) const;
  std::optional<std::size_t> position(const MultiIndex& nu) const;
  /// Largest nu_k over the set.
  int max_degree(int k) const;
  /// Largest entry over all coordinates.
  int max_degree() const;
  /// The first n indices in graded order. A graded prefix of a lower set is
  /// again lower.
  IndexSet truncated(std::size_t n) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  int dim_;
  std::vector<MultiIndex> indices_;
};

struct IndexSetSpec {
  IndexKind kind = IndexKind::TotalDegree;
  double order = 0.0;
  std::vector<double> anisotropy;  ///< empty means isotropic

  /// "tp:p", "td:p", "hc:p" or "hcsum:p", optionally followed by
  /// ":a=a1,a2,...".
  static IndexSetSpec parse(std::string_view spec);
  std::string name() const;
};

inline constexpr std::size_t kDefaultIndexCap = 1'000'000;

/// Enumerates the index set of the given kind. Throws SizeError when the set
/// would exceed `cap` elements.
IndexSet build_index_set(IndexKind kind, int d, double p, std::span<const double> anisotropy = {},
                         std::size_t cap = kDefaultIndexCap);

IndexSet build_index_set(const IndexSetSpec& spec, int d, std::size_t cap = kDefaultIndexCap);

/// Smallest lower set of the given kind with at least n elements, cut down
/// to exactly n by graded truncation. Used for sweeps over n.
IndexSet lower_set_of_size(IndexKind kind, int d, std::size_t n);

/// Downward closure check.
bool is_lower(const IndexSet& s);

}  // namespace wls
