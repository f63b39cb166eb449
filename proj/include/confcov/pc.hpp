#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "confcov/linalg.hpp"
#include "confcov/metrics.hpp"

namespace confcov {

inline constexpr double kMaxConditionNumber = 1e12;

using SepsetMap = std::map<std::pair<Index, Index>, std::vector<Index>>;

struct Skeleton {
  EdgeSet edges;
  SepsetMap sepsets;  ///< keyed by (j, k) with j < k
};

struct Cpdag {
  Index p = 0;
  std::set<std::pair<Index, Index>> directed;    ///< (from, to)
  std::set<std::pair<Index, Index>> undirected;  ///< (j, k), j < k
  SepsetMap sepsets;
  std::set<std::pair<Index, Index>> conflicts;   ///< pairs left undirected after contradictory orientation
};

/// Partial correlation of j and k given cond, from the inverse of est on
/// A = {j, k} u cond. Returns nullopt when est_{A,A} is numerically singular
/// (condition number above 1e12), which callers treat as independence.
inline std::optional<double> partial_correlation(const SymmetricMatrix& est, Index j, Index k,
                                                 const std::vector<Index>& cond) {
  detail::require(j != k, ErrorCode::InvalidArgument, "partial correlation needs j != k");
  detail::require(std::find(cond.begin(), cond.end(), j) == cond.end() &&
                      std::find(cond.begin(), cond.end(), k) == cond.end(),
                  ErrorCode::InvalidArgument, "conditioning set must exclude j and k");
  // canonical ordering makes the statistic exactly symmetric in (j, k)
  std::vector<Index> idx{std::min(j, k), std::max(j, k)};
  std::vector<Index> rest(cond);
  std::sort(rest.begin(), rest.end());
  idx.insert(idx.end(), rest.begin(), rest.end());

  const Matrix sub = est.values()(idx, idx);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sub);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const Vector& lam = eig.eigenvalues();
  const double lo = lam(0);
  const double hi = lam(lam.size() - 1);
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) return std::nullopt;

  const Matrix& vecs = eig.eigenvectors();
  const Vector inv = lam.cwiseInverse();
  const auto psi = [&](Index a, Index b) { return (vecs.row(a).transpose().cwiseProduct(inv)).dot(vecs.row(b).transpose()); };
  const double value = -psi(0, 1) / std::sqrt(psi(0, 0) * psi(1, 1));
  return std::clamp(value, -1.0, 1.0);
}

/// Conditional dependence test: |partial correlation| >= tau. Singular blocks count as independent.
inline bool ci_test(const SymmetricMatrix& est, Index j, Index k, const std::vector<Index>& cond,
                    double tau) {
  detail::require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
  const auto rho = partial_correlation(est, j, k, cond);
  return rho.has_value() && std::abs(*rho) >= tau;
}

namespace detail {

/// Calls fn on every size-`size` subset of pool in lexicographic order; stops when fn returns true.
template <class Fn>
bool for_each_subset(const std::vector<Index>& pool, std::size_t size, Fn&& fn) {
  if (size > pool.size()) return false;
  std::vector<std::size_t> pick(size);
  for (std::size_t i = 0; i < size; ++i) pick[i] = i;
  std::vector<Index> subset(size);
  while (true) {
    for (std::size_t i = 0; i < size; ++i) subset[i] = pool[pick[i]];
    if (fn(subset)) return true;
    std::size_t i = size;
    while (i > 0 && pick[i - 1] == pool.size() - size + i - 1) --i;
    if (i == 0) return false;
    ++pick[i - 1];
    for (std::size_t t = i; t < size; ++t) pick[t] = pick[t - 1] + 1;
  }
}

}  // namespace detail

/// Order-independent (stable) PC skeleton search.
inline Skeleton pc_skeleton(const SymmetricMatrix& est, double tau, Index max_cond_size) {
  detail::require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidArgument, "tau must lie in (0, 1)");
  detail::require(max_cond_size >= 0, ErrorCode::InvalidArgument, "max_cond_size must be >= 0");
  const Index p = est.dim();
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(p),
                                     std::vector<bool>(static_cast<std::size_t>(p), true));
  for (Index j = 0; j < p; ++j) adj[j][j] = false;

  Skeleton out;
  for (Index level = 0; level <= max_cond_size; ++level) {
    const auto frozen = adj;
    auto neighbours = [&](Index v, Index except) {
      std::vector<Index> nb;
      for (Index u = 0; u < p; ++u)
        if (u != except && frozen[v][u]) nb.push_back(u);
      return nb;
    };
    bool any_testable = false;
    for (Index j = 0; j < p; ++j) {
      for (Index k = j + 1; k < p; ++k) {
        if (!adj[j][k]) continue;
        std::optional<std::vector<Index>> sep;
        for (Index side : {j, k}) {
          const auto pool = neighbours(side, side == j ? k : j);
          if (static_cast<Index>(pool.size()) < level) continue;
          any_testable = true;
          detail::for_each_subset(pool, static_cast<std::size_t>(level), [&](const std::vector<Index>& s) {
            if (!ci_test(est, j, k, s, tau)) {
              sep = s;
              return true;
            }
            return false;
          });
          if (sep) break;
        }
        if (sep) {
          adj[j][k] = adj[k][j] = false;
          out.sepsets[{j, k}] = *sep;
        }
      }
    }
    if (!any_testable) break;
  }

  out.edges = EdgeSet(p);
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k)
      if (adj[j][k]) out.edges.insert(j, k);
  return out;
}

namespace detail {

/// Edge marks: mark[a][b] && mark[b][a] is a - b; mark[a][b] alone is a -> b.
class Pdag {
 public:
  explicit Pdag(Index p) : p_(p), mark_(static_cast<std::size_t>(p), std::vector<bool>(static_cast<std::size_t>(p), false)) {}

  Index p() const { return p_; }
  bool adjacent(Index a, Index b) const { return mark_[a][b] || mark_[b][a]; }
  bool undirected(Index a, Index b) const { return mark_[a][b] && mark_[b][a]; }
  bool directed(Index a, Index b) const { return mark_[a][b] && !mark_[b][a]; }
  void add_undirected(Index a, Index b) { mark_[a][b] = mark_[b][a] = true; }
  void orient(Index a, Index b) {
    mark_[a][b] = true;
    mark_[b][a] = false;
  }

 private:
  Index p_;
  std::vector<std::vector<bool>> mark_;
};

inline bool apply_meek_rules(Pdag& g, const std::set<std::pair<Index, Index>>& locked) {
  const Index p = g.p();
  bool changed = false;
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      if (a == b || !g.undirected(a, b) || locked.count({std::min(a, b), std::max(a, b)})) continue;
      bool orient = false;
      for (Index c = 0; c < p && !orient; ++c) {
        if (c == a || c == b) continue;
        // R1: c -> a - b, c not adjacent to b
        if (g.directed(c, a) && !g.adjacent(c, b)) orient = true;
        // R2: a -> c -> b
        else if (g.directed(a, c) && g.directed(c, b)) orient = true;
      }
      // R3: a - c -> b, a - d -> b, c and d non-adjacent
      for (Index c = 0; c < p && !orient; ++c) {
        if (c == a || c == b || !g.undirected(a, c) || !g.directed(c, b)) continue;
        for (Index d = c + 1; d < p && !orient; ++d) {
          if (d == a || d == b || !g.undirected(a, d) || !g.directed(d, b)) continue;
          if (!g.adjacent(c, d)) orient = true;
        }
      }
      // R4: a - d, a adj c, c -> d -> b, c not adjacent to b
      for (Index d = 0; d < p && !orient; ++d) {
        if (d == a || d == b || !g.undirected(a, d) || !g.directed(d, b)) continue;
        for (Index c = 0; c < p && !orient; ++c) {
          if (c == a || c == b || c == d) continue;
          if (g.adjacent(a, c) && g.directed(c, d) && !g.adjacent(c, b)) orient = true;
        }
      }
      if (orient) {
        g.orient(a, b);
        changed = true;
      }
    }
  }
  return changed;
}

}  // namespace detail

/// Orient a PC skeleton into a CPDAG: v-structures from the separating sets, then
/// Meek rules 1-4 to closure. Pairs receiving contradictory v-structure
/// orientations stay undirected and are listed in `conflicts`.
inline Cpdag cpdag_orient(const EdgeSet& skeleton, const SepsetMap& sepsets) {
  const Index p = skeleton.p();
  detail::Pdag g(p);
  for (const auto& [a, b] : skeleton) g.add_undirected(a, b);

  std::set<std::pair<Index, Index>> arrows;  // demanded (from, to)
  for (Index j = 0; j < p; ++j) {
    for (Index k = j + 1; k < p; ++k) {
      if (g.adjacent(j, k)) continue;
      const auto it = sepsets.find({j, k});
      const std::vector<Index> empty;
      const std::vector<Index>& sep = it == sepsets.end() ? empty : it->second;
      for (Index m = 0; m < p; ++m) {
        if (m == j || m == k || !g.adjacent(j, m) || !g.adjacent(k, m)) continue;
        if (std::find(sep.begin(), sep.end(), m) != sep.end()) continue;
        arrows.emplace(j, m);
        arrows.emplace(k, m);
      }
    }
  }

  Cpdag out;
  out.p = p;
  out.sepsets = sepsets;
  for (const auto& [from, to] : arrows) {
    if (arrows.count({to, from})) {
      out.conflicts.emplace(std::min(from, to), std::max(from, to));
    } else {
      g.orient(from, to);
    }
  }

  while (detail::apply_meek_rules(g, out.conflicts)) {
  }

  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      if (g.directed(a, b)) out.directed.emplace(a, b);
      if (a < b && g.undirected(a, b)) out.undirected.emplace(a, b);
    }
  }
  return out;
}

/// Full PC algorithm: stable skeleton followed by orientation.
inline Cpdag pc_algorithm(const SymmetricMatrix& est, double tau, Index max_cond_size) {
  const Skeleton sk = pc_skeleton(est, tau, max_cond_size);
  return cpdag_orient(sk.edges, sk.sepsets);
}

struct CpdagDiagnostics {
  std::optional<double> omega_min;  ///< smallest nonzero |partial correlation| with |S| <= d
  double sigma_r = 0.0;             ///< smallest eigenvalue over principal blocks of size <= d + 2
};

/// Exhaustive signal-strength and restricted-eigenvalue diagnostics (p <= 15, d <= 4).
inline CpdagDiagnostics cpdag_diagnostics(const SymmetricMatrix& sigma, Index d) {
  const Index p = sigma.dim();
  detail::require(p <= 15 && d <= 4, ErrorCode::TooLargeForExhaustive,
                  "exhaustive diagnostics need p <= 15 and d <= 4");
  detail::require(d >= 0, ErrorCode::InvalidArgument, "d must be >= 0");
  CpdagDiagnostics out;
  std::vector<Index> all(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) all[static_cast<std::size_t>(i)] = i;

  for (Index j = 0; j < p; ++j) {
    for (Index k = j + 1; k < p; ++k) {
      std::vector<Index> pool;
      for (Index v = 0; v < p; ++v)
        if (v != j && v != k) pool.push_back(v);
      for (Index size = 0; size <= std::min<Index>(d, static_cast<Index>(pool.size())); ++size) {
        detail::for_each_subset(pool, static_cast<std::size_t>(size), [&](const std::vector<Index>& s) {
          const auto rho = partial_correlation(sigma, j, k, s);
          if (rho && std::abs(*rho) > 1e-10) {
            out.omega_min = std::min(out.omega_min.value_or(1.0), std::abs(*rho));
          }
          return false;
        });
      }
    }
  }

  out.sigma_r = std::numeric_limits<double>::infinity();
  for (Index size = 1; size <= std::min<Index>(d + 2, p); ++size) {
    detail::for_each_subset(all, static_cast<std::size_t>(size), [&](const std::vector<Index>& idx) {
      const Matrix sub = sigma.values()(idx, idx);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
      out.sigma_r = std::min(out.sigma_r, eig.eigenvalues()(0));
      return false;
    });
  }
  return out;
}

}  // namespace confcov
