#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "confcov/linalg.hpp"

namespace confcov {

enum class NormKind { Frobenius, Linf };

struct ScaleFit {
  double kappa = 0.0;
  double residual = 0.0;
  NormKind norm_kind = NormKind::Frobenius;
  bool clamped = false;  ///< unclamped optimum was negative (anti-correlated estimate)
};

/// Undirected edges (j, k) with j < k over p nodes.
class EdgeSet {
 public:
  using Edge = std::pair<Index, Index>;

  EdgeSet() = default;
  explicit EdgeSet(Index p) : p_(p) {}

  void insert(Index a, Index b) {
    detail::require(a != b, ErrorCode::InvalidArgument, "self-loops are not edges");
    detail::require(a >= 0 && b >= 0 && a < p_ && b < p_, ErrorCode::InvalidArgument,
                    "edge index out of range");
    edges_.emplace(std::min(a, b), std::max(a, b));
  }

  bool contains(Index a, Index b) const { return edges_.count({std::min(a, b), std::max(a, b)}) > 0; }
  Index p() const noexcept { return p_; }
  std::size_t size() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  Index p_ = 0;
  std::set<Edge> edges_;
};

namespace detail {

inline Vector strict_upper(const Matrix& m) {
  const Index p = m.rows();
  Vector out(p * (p - 1) / 2);
  Index i = 0;
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k) out(i++) = m(j, k);
  return out;
}

inline void require_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch,
          "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

}  // namespace detail

/// Pearson correlation of the strict upper triangles (diagonals omitted).
inline double offdiag_correlation(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  detail::require_same_dim(a, b);
  Vector x = detail::strict_upper(a.values());
  Vector y = detail::strict_upper(b.values());
  x.array() -= x.mean();
  y.array() -= y.mean();
  const double sx = x.norm();
  const double sy = y.norm();
  detail::require(sx > 0.0 && sy > 0.0, ErrorCode::ZeroVariance, "off-diagonal entries are constant");
  return std::clamp(x.dot(y) / (sx * sy), -1.0, 1.0);
}

/// argmin_{kappa >= 0} ||sigma - kappa est||_F in closed form.
inline ScaleFit best_kappa_frobenius(const SymmetricMatrix& sigma, const SymmetricMatrix& est) {
  detail::require_same_dim(sigma, est);
  ScaleFit fit;
  fit.norm_kind = NormKind::Frobenius;
  const double denom = est.values().squaredNorm();
  if (denom == 0.0) {
    fit.residual = sigma.values().norm();
    return fit;
  }
  const double kappa = sigma.values().cwiseProduct(est.values()).sum() / denom;
  fit.clamped = kappa < 0.0;
  fit.kappa = std::max(kappa, 0.0);
  fit.residual = (sigma.values() - fit.kappa * est.values()).norm();
  return fit;
}

/// argmin_{kappa >= 0} max_{j,k} |sigma_jk - kappa est_jk| by golden-section search.
inline ScaleFit best_kappa_linf(const SymmetricMatrix& sigma, const SymmetricMatrix& est) {
  detail::require_same_dim(sigma, est);
  ScaleFit fit;
  fit.norm_kind = NormKind::Linf;
  const double sig_max = sigma.values().cwiseAbs().maxCoeff();
  const double est_max = est.values().cwiseAbs().maxCoeff();
  if (est_max == 0.0) {
    fit.residual = sig_max;
    return fit;
  }
  auto objective = [&](double kappa) {
    return (sigma.values() - kappa * est.values()).cwiseAbs().maxCoeff();
  };
  // the objective is convex, so golden-section search on the bracket is exact up to width
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = 1.0 + 2.0 * sig_max / est_max;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > 1e-10) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = objective(x2);
    }
  }
  fit.kappa = 0.5 * (lo + hi);
  fit.residual = objective(fit.kappa);
  // Snap to the vertex where the active lines at both bracket ends cross; the
  // bracket alone leaves a residual error proportional to the slope.
  auto active = [&](double kappa) {
    Index r = 0;
    Index c = 0;
    const Matrix d = sigma.values() - kappa * est.values();
    d.cwiseAbs().maxCoeff(&r, &c);
    const double s = d(r, c) >= 0.0 ? 1.0 : -1.0;
    return std::pair(s * sigma(r, c), s * est(r, c));
  };
  const auto [a1, b1] = active(lo);
  const auto [a2, b2] = active(hi);
  if (b1 != b2) {
    const double vertex = (a1 - a2) / (b1 - b2);
    if (vertex >= 0.0 && std::abs(vertex - fit.kappa) <= 1e-6 * std::max(1.0, fit.kappa)) {
      if (const double r = objective(vertex); r <= fit.residual) {
        fit.kappa = vertex;
        fit.residual = r;
      }
    }
  }
  if (const double at_zero = objective(0.0); at_zero < fit.residual) {
    fit.kappa = 0.0;
    fit.residual = at_zero;
  }
  return fit;
}

/// The r pairs j < k with the largest |s_jk|; ties broken by (j, k) order.
inline EdgeSet top_edges(const SymmetricMatrix& s, Index r) {
  const Index p = s.dim();
  detail::require(r >= 0 && r <= p * (p - 1) / 2, ErrorCode::RTooLarge,
                  "r exceeds the number of pairs p(p-1)/2");
  struct Entry {
    double magnitude;
    Index j;
    Index k;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(p * (p - 1) / 2));
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k) entries.push_back({std::abs(s(j, k)), j, k});
  const auto cmp = [](const Entry& a, const Entry& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return std::pair(a.j, a.k) < std::pair(b.j, b.k);
  };
  std::partial_sort(entries.begin(), entries.begin() + r, entries.end(), cmp);
  EdgeSet out(p);
  for (Index i = 0; i < r; ++i) out.insert(entries[static_cast<std::size_t>(i)].j,
                                           entries[static_cast<std::size_t>(i)].k);
  return out;
}

inline double jaccard(const EdgeSet& a, const EdgeSet& b) {
  detail::require(a.p() == b.p(), ErrorCode::DimensionMismatch, "edge sets over different node counts");
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& e : a)
    if (b.edges().count(e)) ++common;
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace confcov
