#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "confcov/linalg.hpp"
#include "confcov/metrics.hpp"

namespace confcov {

struct NodewiseFit {
  Index j = 0;
  Vector beta;  ///< length p, beta[j] == 0
  double lambda = 0.0;
  std::vector<Index> support;
  double kkt_residual = 0.0;
  Index iterations = 0;
};

struct NodewiseOptions {
  double tol = 1e-10;
  Index max_iter = 100000;
};

namespace detail {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Largest KKT violation of the covariance-input Lasso at beta.
inline double lasso_kkt_residual(const Matrix& est, Index j, const Vector& beta, double lambda) {
  const Vector grad = est.col(j) - est * beta;
  double worst = 0.0;
  for (Index k = 0; k < est.rows(); ++k) {
    if (k == j) continue;
    const double v = beta(k) != 0.0 ? std::abs(grad(k) - lambda * sign(beta(k)))
                                    : std::max(0.0, std::abs(grad(k)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace detail

/// Nodewise regression of variable j on the rest using only the covariance:
/// minimises 1/2 b^T est b - b^T est_{.j} + lambda |b|_1 with b_j = 0 by cyclic
/// coordinate descent. Stops once a full sweep moves no coefficient by tol or more.
inline NodewiseFit nodewise_lasso(const SymmetricMatrix& est, Index j, double lambda,
                                  NodewiseOptions opts = {}) {
  const Matrix& s = est.values();
  const Index p = est.dim();
  detail::require(j >= 0 && j < p, ErrorCode::InvalidArgument, "node index out of range");
  detail::require(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be >= 0");
  detail::require(opts.tol > 0.0, ErrorCode::InvalidArgument, "tol must be > 0");

  if (lambda == 0.0 && p > 1) {
    std::vector<Index> rest;
    for (Index k = 0; k < p; ++k)
      if (k != j) rest.push_back(k);
    const Matrix sub = s(rest, rest);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(eig.eigenvalues().size() - 1);
    detail::require(lo > 1e-12 * std::max(hi, 1e-300), ErrorCode::SingularGram,
                    "lambda = 0 needs est_{-j,-j} positive definite (node " + std::to_string(j) + ")");
  }

  NodewiseFit fit;
  fit.j = j;
  fit.lambda = lambda;
  fit.beta = Vector::Zero(p);
  Vector fitted = Vector::Zero(p);  // est * beta

  bool converged = false;
  for (Index iter = 1; iter <= opts.max_iter; ++iter) {
    double max_change = 0.0;
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      const double diag = s(k, k);
      const double old = fit.beta(k);
      double updated = 0.0;
      if (diag > 0.0) {
        const double partial = s(k, j) - (fitted(k) - diag * old);
        updated = detail::soft_threshold(partial, lambda) / diag;
      }
      const double delta = updated - old;
      if (delta != 0.0) {
        fit.beta(k) = updated;
        fitted.noalias() += delta * s.col(k);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    fit.iterations = iter;
    if (max_change < opts.tol) {
      converged = true;
      break;
    }
  }
  detail::require(converged, ErrorCode::NotConverged,
                  "node " + std::to_string(j) + " did not converge in " +
                      std::to_string(opts.max_iter) + " sweeps");

  for (Index k = 0; k < p; ++k)
    if (fit.beta(k) != 0.0) fit.support.push_back(k);
  fit.kkt_residual = detail::lasso_kkt_residual(s, j, fit.beta, lambda);
  return fit;
}

/// Indices k with beta_k != 0 and |beta_k| >= thresh.
inline std::vector<Index> threshold_support(const NodewiseFit& fit, double thresh) {
  detail::require(thresh >= 0.0, ErrorCode::InvalidArgument, "threshold must be >= 0");
  std::vector<Index> out;
  for (Index k : fit.support)
    if (std::abs(fit.beta(k)) >= thresh) out.push_back(k);
  return out;
}

enum class CombineRule { And, Or };

struct CigResult {
  EdgeSet edges;
  SymmetricMatrix precision_proxy;
  std::vector<NodewiseFit> fits;
};

/// Raised by cig_estimate when one or more nodewise fits fail.
class NodewiseFailure : public Error {
 public:
  NodewiseFailure(ErrorCode code, std::vector<std::pair<Index, std::string>> failures)
      : Error(code, describe(failures)), failures_(std::move(failures)) {}

  const std::vector<std::pair<Index, std::string>>& failures() const noexcept { return failures_; }

 private:
  static std::string describe(const std::vector<std::pair<Index, std::string>>& failures) {
    std::string out = std::to_string(failures.size()) + " nodewise fit(s) failed:";
    for (const auto& [node, msg] : failures) out += " [node " + std::to_string(node) + "] " + msg;
    return out;
  }

  std::vector<std::pair<Index, std::string>> failures_;
};

/// Conditional independence graph by nodewise regression on a covariance estimate.
///
/// The precision proxy has unit diagonal and off-diagonal
/// -sign(beta^(j)_k) sqrt(|beta^(j)_k beta^(k)_j|) for j < k.
inline CigResult cig_estimate(const SymmetricMatrix& est, double lambda, CombineRule rule,
                              NodewiseOptions opts = {}) {
  const Index p = est.dim();
  CigResult out;
  out.fits.reserve(static_cast<std::size_t>(p));
  std::vector<std::pair<Index, std::string>> failures;
  ErrorCode first_code = ErrorCode::NotConverged;
  for (Index j = 0; j < p; ++j) {
    try {
      out.fits.push_back(nodewise_lasso(est, j, lambda, opts));
    } catch (const Error& e) {
      if (failures.empty()) first_code = e.code();
      failures.emplace_back(j, e.what());
      out.fits.emplace_back();
    }
  }
  if (!failures.empty()) throw NodewiseFailure(first_code, std::move(failures));

  out.edges = EdgeSet(p);
  Matrix proxy = Matrix::Identity(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index k = j + 1; k < p; ++k) {
      const double bjk = out.fits[static_cast<std::size_t>(j)].beta(k);
      const double bkj = out.fits[static_cast<std::size_t>(k)].beta(j);
      const bool present = rule == CombineRule::And ? (bjk != 0.0 && bkj != 0.0)
                                                    : (bjk != 0.0 || bkj != 0.0);
      if (present) out.edges.insert(j, k);
      proxy(j, k) = -detail::sign(bjk) * std::sqrt(std::abs(bjk * bkj));
    }
  }
  out.precision_proxy = SymmetricMatrix(proxy);
  return out;
}

}  // namespace confcov
