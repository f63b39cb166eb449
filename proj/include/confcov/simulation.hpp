#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "confcov/linalg.hpp"
#include "confcov/random.hpp"

namespace confcov {

enum class ScenarioKind { Block, Block2, Toeplitz, Toeplitz2, ErdosRenyi };
enum class Link { Linear, MaxLinear };

constexpr std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Block: return "block";
    case ScenarioKind::Block2: return "block2";
    case ScenarioKind::Toeplitz: return "toeplitz";
    case ScenarioKind::Toeplitz2: return "toeplitz2";
    case ScenarioKind::ErdosRenyi: return "erdos_renyi";
  }
  return "unknown";
}

constexpr std::string_view to_string(Link link) {
  return link == Link::Linear ? "linear" : "max_linear";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  for (auto kind : {ScenarioKind::Block, ScenarioKind::Block2, ScenarioKind::Toeplitz,
                    ScenarioKind::Toeplitz2, ScenarioKind::ErdosRenyi}) {
    if (s == to_string(kind)) return kind;
  }
  return std::nullopt;
}

inline std::optional<Link> parse_link(std::string_view s) {
  if (s == "linear") return Link::Linear;
  if (s == "max_linear") return Link::MaxLinear;
  return std::nullopt;
}

/// Number of latent confounders each scenario uses.
constexpr Index latent_dimension(ScenarioKind kind) {
  return kind == ScenarioKind::Toeplitz2 ? 3 : 20;
}

inline constexpr std::array<double, 9> kAllowedDf = {1, 2, 3, 5, 10, 20, 50, 100, kInfDf};

inline bool is_allowed_df(double df) {
  return std::find(kAllowedDf.begin(), kAllowedDf.end(), df) != kAllowedDf.end();
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Block;
  Index p = 100;
  Index n = 100;
  double nu = 1.0;
  double df1 = kInfDf;  ///< idiosyncratic degrees of freedom, inf = Gaussian
  double df2 = kInfDf;  ///< loading degrees of freedom, inf = Gaussian
  Link link = Link::Linear;
  std::uint64_t seed = 0;

  Index q() const { return latent_dimension(kind); }

  void validate() const {
    using detail::require;
    if (kind == ScenarioKind::Block) {
      require(p % 10 == 0 && p >= 20, ErrorCode::IndivisibleDimension,
              "block scenario needs p divisible by 10 and p >= 20");
    } else if (kind == ScenarioKind::Block2) {
      require(p % 20 == 0 && p >= 20, ErrorCode::IndivisibleDimension,
              "block2 scenario needs p divisible by 20 (ten blocks in the first half)");
    }
    require(p >= q() + 1, ErrorCode::InvalidArgument, "need p >= q + 1");
    require(n >= 2, ErrorCode::InvalidArgument, "need n >= 2");
    require(nu >= 0.0 && std::isfinite(nu), ErrorCode::InvalidArgument, "need finite nu >= 0");
    require(is_allowed_df(df1) && is_allowed_df(df2), ErrorCode::InvalidArgument,
            "degrees of freedom must be one of 1,2,3,5,10,20,50,100,inf");
  }
};

struct ScenarioMatrices {
  SymmetricMatrix sigma;
  SymmetricMatrix omega;
};

struct GroundTruth {
  SymmetricMatrix sigma;
  SymmetricMatrix omega;  ///< sigma^{-1}
  Matrix gamma;           ///< p x q loadings
  Index q = 0;
  SymmetricMatrix theta;  ///< sigma + gamma gamma^T

  GroundTruth() = default;

  GroundTruth(SymmetricMatrix sigma_in, Matrix gamma_in,
              std::optional<SymmetricMatrix> omega_in = std::nullopt)
      : sigma(std::move(sigma_in)), gamma(std::move(gamma_in)), q(gamma.cols()) {
    detail::require(gamma.rows() == sigma.dim(), ErrorCode::DimensionMismatch,
                    "loadings must have p rows");
    if (omega_in) {
      omega = std::move(*omega_in);
    } else {
      Eigen::LLT<Matrix> llt(sigma.values());
      detail::require(llt.info() == Eigen::Success, ErrorCode::SingularConstruction,
                      "sigma is not positive definite");
      omega = SymmetricMatrix(Matrix(llt.solve(Matrix::Identity(sigma.dim(), sigma.dim()))));
    }
    Matrix t = sigma.values() + gamma * gamma.transpose();
    theta = SymmetricMatrix(t);
  }
};

/// Unit-diagonal circulant precision with -0.4999 on the first (circular) off-diagonals.
inline SymmetricMatrix toeplitz_precision(Index p) {
  detail::require(p >= 3, ErrorCode::InvalidArgument, "toeplitz scenario needs p >= 3");
  Matrix omega = Matrix::Identity(p, p);
  for (Index j = 0; j < p; ++j) {
    const Index k = (j + 1) % p;
    omega(j, k) = -0.4999;
    omega(k, j) = -0.4999;
  }
  return SymmetricMatrix(omega);
}

/// Random Erdos-Renyi precision: each edge with probability min(1, 10/p), all
/// edges sharing one negative weight so that every row's off-diagonal absolute
/// sum is at most 0.99 - 1e-6.
inline SymmetricMatrix erdos_renyi_precision(Index p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x45}));
  std::bernoulli_distribution edge(std::min(1.0, 10.0 / static_cast<double>(p)));
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k)
      if (edge(rng)) adj(j, k) = adj(k, j) = 1;

  const int max_degree = adj.rowwise().sum().maxCoeff();
  Matrix omega = Matrix::Identity(p, p);
  if (max_degree > 0) {
    const double weight = -(0.99 - 1e-6) / static_cast<double>(max_degree);
    for (Index j = 0; j < p; ++j)
      for (Index k = 0; k < p; ++k)
        if (adj(j, k)) omega(j, k) = weight;
  }
  return SymmetricMatrix(omega);
}

namespace detail {

/// Invert a precision matrix and rescale both so the covariance has unit diagonal.
inline ScenarioMatrices from_precision(const SymmetricMatrix& raw_omega) {
  const Index p = raw_omega.dim();
  Eigen::LLT<Matrix> llt(raw_omega.values());
  require(llt.info() == Eigen::Success, ErrorCode::SingularConstruction,
          "precision matrix is not positive definite");
  Matrix sigma = llt.solve(Matrix::Identity(p, p));
  const Vector d = sigma.diagonal().cwiseSqrt();
  sigma = d.cwiseInverse().asDiagonal() * sigma * d.cwiseInverse().asDiagonal();
  sigma.diagonal().setOnes();
  Matrix omega = d.asDiagonal() * raw_omega.values() * d.asDiagonal();
  return {SymmetricMatrix(sigma), SymmetricMatrix(omega)};
}

inline ScenarioMatrices from_covariance(const Matrix& sigma) {
  const Index p = sigma.rows();
  Eigen::LLT<Matrix> llt(sigma);
  require(llt.info() == Eigen::Success, ErrorCode::SingularConstruction,
          "covariance is not positive definite");
  Matrix omega = llt.solve(Matrix::Identity(p, p));
  return {SymmetricMatrix(sigma), SymmetricMatrix(omega)};
}

inline void fill_block(Matrix& sigma, Index start, Index size, double rho) {
  sigma.block(start, start, size, size).setConstant(rho);
  for (Index j = start; j < start + size; ++j) sigma(j, j) = 1.0;
}

}  // namespace detail

/// Idiosyncratic covariance (unit diagonal) and its inverse for a scenario.
/// The seed only matters for erdos_renyi.
inline ScenarioMatrices build_scenario_sigma(ScenarioKind kind, Index p, std::uint64_t seed) {
  switch (kind) {
    case ScenarioKind::Block: {
      detail::require(p % 10 == 0 && p >= 20, ErrorCode::IndivisibleDimension,
                      "block scenario needs p divisible by 10 and p >= 20");
      Matrix sigma = Matrix::Zero(p, p);
      const Index size = p / 10;
      for (Index b = 0; b < 10; ++b) detail::fill_block(sigma, b * size, size, 0.95);
      return detail::from_covariance(sigma);
    }
    case ScenarioKind::Block2: {
      detail::require(p % 20 == 0 && p >= 20, ErrorCode::IndivisibleDimension,
                      "block2 scenario needs p divisible by 20");
      Matrix sigma = Matrix::Zero(p, p);
      const Index half = p / 2;
      const Index size = half / 10;
      for (Index b = 0; b < 10; ++b) detail::fill_block(sigma, b * size, size, 0.95);
      detail::fill_block(sigma, half, p - half, 0.5);
      return detail::from_covariance(sigma);
    }
    case ScenarioKind::Toeplitz:
    case ScenarioKind::Toeplitz2:
      return detail::from_precision(toeplitz_precision(p));
    case ScenarioKind::ErdosRenyi:
      return detail::from_precision(erdos_renyi_precision(p, seed));
  }
  detail::fail(ErrorCode::InvalidArgument, "unknown scenario kind");
}

/// Loadings with i.i.d. standard normal (or multivariate-t rows) entries; column
/// k = 1..q is multiplied by nu * exp(-k).
inline Matrix sample_loadings(Index p, Index q, double nu, double df2, std::uint64_t seed) {
  detail::require(q >= 1, ErrorCode::InvalidArgument, "need q >= 1");
  detail::require(nu >= 0.0, ErrorCode::InvalidArgument, "need nu >= 0");
  if (nu == 0.0) return Matrix::Zero(p, q);
  Rng rng(seed);
  Matrix gamma = standard_normal(p, q, rng);
  if (!std::isinf(df2)) {
    for (Index j = 0; j < p; ++j) gamma.row(j) *= t_row_scale(df2, rng);
  }
  for (Index k = 0; k < q; ++k) gamma.col(k) *= nu * std::exp(-static_cast<double>(k + 1));
  return gamma;
}

/// Scenario ground truth: sigma from the scenario kind, loadings from (nu, df2).
inline GroundTruth make_ground_truth(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioMatrices m = build_scenario_sigma(spec.kind, spec.p, derive_seed(spec.seed, {1}));
  Matrix gamma = sample_loadings(spec.p, spec.q(), spec.nu, spec.df2, derive_seed(spec.seed, {2}));
  return GroundTruth(std::move(m.sigma), std::move(gamma), std::move(m.omega));
}

/// n observations of x = w + gamma h (or max(w, gamma h) coordinatewise).
/// w has shape sigma, h has identity shape; for finite df1 both are
/// multivariate t with df1 degrees of freedom, with independent radii.
inline DataMatrix sample_dataset(const GroundTruth& gt, Index n, double df1, Link link,
                                 std::uint64_t seed) {
  detail::require(n >= 2, ErrorCode::RowCountTooSmall, "need n >= 2");
  const Index p = gt.sigma.dim();
  Eigen::LLT<Matrix> llt(gt.sigma.values());
  detail::require(llt.info() == Eigen::Success, ErrorCode::SingularConstruction,
                  "sigma is not positive definite");
  Rng rng(seed);
  Matrix w = standard_normal(n, p, rng) * llt.matrixU();
  Matrix h = standard_normal(n, gt.q, rng);
  if (!std::isinf(df1)) {
    for (Index i = 0; i < n; ++i) {
      w.row(i) *= t_row_scale(df1, rng);
      h.row(i) *= t_row_scale(df1, rng);
    }
  }
  Matrix confound = h * gt.gamma.transpose();
  Matrix x = link == Link::Linear ? Matrix(w + confound) : Matrix(w.cwiseMax(confound));
  return DataMatrix(std::move(x));
}

struct Diagnostics {
  double gamma_l = 0.0;  ///< min eigenvalue of gamma^T gamma
  double gamma_u = 0.0;  ///< max eigenvalue of gamma^T gamma
  double sigma_l = 0.0;
  double sigma_u = 0.0;
  double rho1 = 0.0;  ///< operator norm of Pi_gamma sigma
  double rho2 = 0.0;  ///< max_j |Pi_gamma e_j|
  Vector eta;         ///< beta_j^T gamma gamma^T beta_j per node
  Index s = 0;        ///< max degree of the conditional independence graph of sigma
  Matrix loading_projection;
  bool rank_deficient_loadings = false;
};

/// Nodewise population regression coefficients: column j holds
/// beta^(j) = sigma_{-j,-j}^{-1} sigma_{-j,j}, zero at j, computed as -omega_kj / omega_jj.
inline Matrix population_regressions(const SymmetricMatrix& omega) {
  const Matrix& o = omega.values();
  Matrix beta = -o * o.diagonal().cwiseInverse().asDiagonal();
  beta.diagonal().setZero();
  return beta;
}

inline Diagnostics population_diagnostics(const GroundTruth& gt) {
  Diagnostics d;
  const Index p = gt.sigma.dim();

  const SymEigResult sig = sym_eig(gt.sigma);
  d.sigma_u = sig.values(0);
  d.sigma_l = sig.values(p - 1);

  d.loading_projection = Matrix::Zero(p, p);
  if (gt.q >= 1) {
    const SymEigResult gg = sym_eig(SymmetricMatrix(Matrix(gt.gamma.transpose() * gt.gamma)));
    d.gamma_u = gg.values(0);
    d.gamma_l = gg.values(gt.q - 1);
    const SvdResult svd = thin_svd(gt.gamma);
    d.rank_deficient_loadings = svd.rank < gt.q;
    const auto basis = svd.u.leftCols(svd.rank);
    d.loading_projection = basis * basis.transpose();
  }

  const Matrix pi_sigma = d.loading_projection * gt.sigma.values();
  d.rho1 = pi_sigma.isZero(0.0) ? 0.0 : thin_svd(pi_sigma).sigma(0);
  d.rho2 = std::sqrt(std::max(0.0, d.loading_projection.diagonal().maxCoeff()));

  const Matrix beta = population_regressions(gt.omega);
  d.eta = (gt.gamma.transpose() * beta).colwise().squaredNorm().transpose();

  const Matrix& o = gt.omega.values();
  const double cut = 1e-8 * o.diagonal().cwiseAbs().maxCoeff();
  for (Index j = 0; j < p; ++j) {
    Index degree = 0;
    for (Index k = 0; k < p; ++k)
      if (k != j && std::abs(o(j, k)) > cut) ++degree;
    d.s = std::max(d.s, degree);
  }
  return d;
}

/// Predicted diagonal of E[rsvp] in the eigenbasis of theta for j > q:
/// (n - q) D_jj^2 / sum_{k>q} D_kk^2.
inline Vector expected_scale_profile(const GroundTruth& gt, Index n) {
  const Index p = gt.sigma.dim();
  detail::require(n < p, ErrorCode::InvalidArgument, "scale profile needs n < p");
  detail::require(gt.q < n, ErrorCode::InvalidArgument, "scale profile needs q < n");
  const SymEigResult eig = sym_eig(gt.theta);
  const Vector tail = eig.values.tail(p - gt.q);
  return static_cast<double>(n - gt.q) * tail / tail.sum();
}

}  // namespace confcov
