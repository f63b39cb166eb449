#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

#include "confcov/linalg.hpp"

namespace confcov {

using Rng = std::mt19937_64;

inline constexpr double kInfDf = std::numeric_limits<double>::infinity();

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed derivation: the result depends only on the base seed
/// and the counters, never on how many draws happened elsewhere.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t c : counters) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // row-major fill so a prefix of rows does not depend on the column count of later rows
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

/// Scale for one multivariate-t row: 1 / sqrt(chi2_df / df). Returns 1 for df = inf.
inline double t_row_scale(double df, Rng& rng) {
  if (std::isinf(df)) return 1.0;
  std::chi_squared_distribution<double> chi2(df);
  double g = chi2(rng);
  // chi2 draws can underflow to 0 for df = 1
  g = std::max(g, std::numeric_limits<double>::min());
  return 1.0 / std::sqrt(g / df);
}

}  // namespace confcov
