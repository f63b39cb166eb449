#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confcov/linalg.hpp"
#include "confcov/random.hpp"

namespace confcov {

enum class Method { Rsvp, RsvpSplit, RsvpSub, PcaRemoval, Empirical, Spectral };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::Rsvp: return "rsvp";
    case Method::RsvpSplit: return "rsvp-split";
    case Method::RsvpSub: return "rsvp-sub";
    case Method::PcaRemoval: return "pca-removal";
    case Method::Empirical: return "empirical";
    case Method::Spectral: return "spectral";
  }
  return "unknown";
}

struct MethodParams {
  std::optional<Index> ell;
  std::optional<Index> m;
  std::optional<Index> b;
  std::optional<std::uint64_t> seed;
};

struct CovEstimate {
  SymmetricMatrix matrix;
  Method method = Method::Empirical;
  bool scale_free = false;  ///< true when only defined up to a positive scalar
  MethodParams params;
};

enum class SubsampleMode { Split, Sub };

struct SubsampleConfig {
  Index m = 0;
  Index b = 1;  ///< ignored in split mode, where it is derived from m
  std::uint64_t seed = 0;
  SubsampleMode mode = SubsampleMode::Split;
};

/// Maps the descending vector of squared singular values to new eigenvalues.
using SpectrumMap = std::function<Vector(const Vector&)>;

namespace detail {

inline SymmetricMatrix projection_of_rows(const Matrix& x, const std::vector<Index>& rows) {
  Matrix block(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) block.row(static_cast<Index>(i)) = x.row(rows[i]);
  block.rowwise() -= block.colwise().mean();
  return row_space_projection(block);
}

inline void validate_subsample(const DataMatrix& x, const SubsampleConfig& cfg, SubsampleMode mode) {
  require(cfg.mode == mode, ErrorCode::InvalidArgument, "subsample mode does not match estimator");
  require(cfg.m >= 3, ErrorCode::SubsampleTooSmall,
          "subsample size m must be >= 3, got " + std::to_string(cfg.m));
  require(cfg.m - 1 < x.cols(), ErrorCode::SubsampleNotHighDimensional,
          "need m - 1 < p, got m = " + std::to_string(cfg.m) + ", p = " + std::to_string(x.cols()));
}

inline SymmetricMatrix average(const std::vector<SymmetricMatrix>& parts) {
  Matrix acc = Matrix::Zero(parts.front().dim(), parts.front().dim());
  for (const auto& part : parts) acc += part.values();
  acc /= static_cast<double>(parts.size());
  return SymmetricMatrix(acc);
}

/// (1/n) V_r diag(h) V_r^T over the numerical rank r.
inline SymmetricMatrix spectral_from_svd(const SvdResult& svd, double n, const Vector& h) {
  const auto basis = svd.v.leftCols(svd.rank);
  Matrix out = basis * h.asDiagonal() * basis.transpose();
  out /= n;
  return SymmetricMatrix(out);
}

inline SvdResult centered_svd(const DataMatrix& x) {
  const DataMatrix centered = center_columns(x);
  return thin_svd(centered.values());
}

}  // namespace detail

/// Row-space projection of the column-centred data.
inline CovEstimate rsvp(const DataMatrix& x) {
  const DataMatrix centered = center_columns(x);
  return {row_space_projection(centered.values()), Method::Rsvp, true, {}};
}

/// Block boundaries for sample splitting of `rows` observations into blocks of
/// size m. A trailing block with fewer than 3 rows is merged into its neighbour.
inline std::vector<Index> split_block_sizes(Index rows, Index m) {
  if (m >= rows) return {rows};
  const Index blocks = (rows + m - 1) / m;
  std::vector<Index> sizes(static_cast<std::size_t>(blocks), m);
  sizes.back() = rows - (blocks - 1) * m;
  if (sizes.back() < 3) {
    const Index tail = sizes.back();
    sizes.pop_back();
    sizes.back() += tail;
  }
  return sizes;
}

/// Sample-splitting RSVP: disjoint random blocks, each centred on its own.
inline CovEstimate rsvp_split(const DataMatrix& x, const SubsampleConfig& cfg) {
  detail::validate_subsample(x, cfg, SubsampleMode::Split);
  const auto sizes = split_block_sizes(x.rows(), cfg.m);
  MethodParams params{std::nullopt, cfg.m, static_cast<Index>(sizes.size()), cfg.seed};
  if (sizes.size() == 1) {
    CovEstimate single = rsvp(x);
    single.method = Method::RsvpSplit;
    single.params = params;
    return single;
  }

  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(cfg.seed, {0}));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<SymmetricMatrix> parts;
  parts.reserve(sizes.size());
  auto next = order.begin();
  for (Index size : sizes) {
    std::vector<Index> rows(next, next + size);
    next += size;
    parts.push_back(detail::projection_of_rows(x.values(), rows));
  }
  return {detail::average(parts), Method::RsvpSplit, true, params};
}

/// Subsampling RSVP: B independent draws of m rows without replacement.
inline CovEstimate rsvp_sub(const DataMatrix& x, const SubsampleConfig& cfg) {
  detail::validate_subsample(x, cfg, SubsampleMode::Sub);
  detail::require(cfg.b >= 1, ErrorCode::InvalidSubsampleCount, "number of subsamples must be >= 1");
  const Index m = std::min(cfg.m, x.rows());

  std::vector<Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Index{0});

  std::vector<SymmetricMatrix> parts;
  parts.reserve(static_cast<std::size_t>(cfg.b));
  for (Index b = 0; b < cfg.b; ++b) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(b) + 1}));
    std::vector<Index> rows;
    rows.reserve(static_cast<std::size_t>(m));
    std::sample(all.begin(), all.end(), std::back_inserter(rows), m, rng);
    parts.push_back(detail::projection_of_rows(x.values(), rows));
  }
  return {detail::average(parts), Method::RsvpSub, true,
          MethodParams{std::nullopt, cfg.m, cfg.b, cfg.seed}};
}

/// (1/n) V h(Lambda^2) V^T with n = rows - 1, over the numerical rank of the centred data.
inline CovEstimate spectral_estimate(const DataMatrix& x, const SpectrumMap& h) {
  const SvdResult svd = detail::centered_svd(x);
  detail::require(svd.rank > 0, ErrorCode::DegenerateRank, "centred data has rank 0");
  const Vector lam2 = svd.sigma.head(svd.rank).array().square();
  const Vector mapped = h(lam2);
  detail::require(mapped.size() == lam2.size(), ErrorCode::InvalidSpectrumMap,
                  "spectrum map changed the vector length");
  detail::require(mapped.allFinite() && (mapped.array() >= 0.0).all(), ErrorCode::InvalidSpectrumMap,
                  "spectrum map produced negative or non-finite values");
  return {detail::spectral_from_svd(svd, static_cast<double>(x.rows() - 1), mapped),
          Method::Spectral, false, {}};
}

/// Empirical covariance of the centred data, divided by n = rows - 1.
inline CovEstimate empirical_covariance(const DataMatrix& x) {
  const DataMatrix centered = center_columns(x);
  Matrix cov = centered.values().transpose() * centered.values();
  cov /= static_cast<double>(x.rows() - 1);
  return {SymmetricMatrix(cov), Method::Empirical, false, {}};
}

/// PC-removal: the empirical covariance with the top `ell` principal components removed.
inline CovEstimate pca_removal(const DataMatrix& x, Index ell) {
  const SvdResult svd = detail::centered_svd(x);
  detail::require(ell >= 0 && ell <= svd.rank, ErrorCode::EllOutOfRange,
                  "ell must lie in [0, " + std::to_string(svd.rank) + "], got " + std::to_string(ell));
  if (svd.rank == 0) {
    return {SymmetricMatrix(x.cols()), Method::PcaRemoval, false, MethodParams{ell, {}, {}, {}}};
  }
  Vector lam2 = svd.sigma.head(svd.rank).array().square();
  lam2.head(ell).setZero();
  return {detail::spectral_from_svd(svd, static_cast<double>(x.rows() - 1), lam2), Method::PcaRemoval,
          false, MethodParams{ell, {}, {}, {}}};
}

namespace detail {

inline Index bai_ng_from_svd(const SvdResult& svd, double n, double p, Index kmax) {
  require(kmax >= 0 && kmax <= svd.rank - 1, ErrorCode::KmaxOutOfRange,
          "kmax must lie in [0, rank - 1] = [0, " + std::to_string(svd.rank - 1) + "]");
  const double penalty = (n + p) / (n * p) * std::log(n * p / (n + p));

  const Vector lam2 = svd.sigma.array().square();
  // suffix sums avoid cancellation in total - head
  Vector tail(lam2.size() + 1);
  tail(lam2.size()) = 0.0;
  for (Index i = lam2.size() - 1; i >= 0; --i) tail(i) = tail(i + 1) + lam2(i);

  Index best = 0;
  double best_ic = std::numeric_limits<double>::infinity();
  for (Index k = 0; k <= kmax; ++k) {
    const double ic = std::log(tail(k) / (n * p)) + static_cast<double>(k) * penalty;
    if (ic < best_ic) {
      best_ic = ic;
      best = k;
    }
  }
  return best;
}

}  // namespace detail

inline constexpr Index kDefaultKmax = 30;

/// Number of factors by the first Bai-Ng information criterion (IC_p1).
///
/// Minimises log V(k) + k (n+p)/(np) log(np/(n+p)) over k = 0..kmax, where
/// V(k) = (1/(np)) sum_{i>k} Lambda_i^2 is the residual variance after removing
/// k principal components and n = rows - 1. Ties go to the smaller k.
inline Index bai_ng_select(const DataMatrix& x, Index kmax) {
  const SvdResult svd = detail::centered_svd(x);
  return detail::bai_ng_from_svd(svd, static_cast<double>(x.rows() - 1),
                                 static_cast<double>(x.cols()), kmax);
}

/// bai_ng_select with kmax = min(rank - 1, kDefaultKmax).
inline Index bai_ng_select(const DataMatrix& x) {
  const SvdResult svd = detail::centered_svd(x);
  detail::require(svd.rank >= 1, ErrorCode::DegenerateRank, "centred data has rank 0");
  const Index kmax = std::min<Index>(svd.rank - 1, kDefaultKmax);
  return detail::bai_ng_from_svd(svd, static_cast<double>(x.rows() - 1),
                                 static_cast<double>(x.cols()), kmax);
}

/// Rule-of-thumb subsample size round(2 sqrt(p)), at least 3.
inline Index default_subsample_size(Index p) {
  const auto m = static_cast<Index>(std::llround(2.0 * std::sqrt(static_cast<double>(p))));
  return std::max<Index>(3, m);
}

}  // namespace confcov
