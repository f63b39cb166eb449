#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "confcov/error.hpp"

namespace confcov {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Observation matrix: one row per observation, one column per variable.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values, bool centered = false)
      : values_(std::move(values)), centered_(centered) {
    detail::require(values_.rows() >= 2, ErrorCode::RowCountTooSmall,
                    "data needs at least 2 rows, got " + std::to_string(values_.rows()));
    detail::require(values_.cols() >= 1, ErrorCode::ShapeError, "data needs at least 1 column");
  }

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  bool centered() const noexcept { return centered_; }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
  bool centered_;
};

/// Dense symmetric matrix. Only the upper triangle of the input is read; the
/// lower triangle is mirrored from it so values(j,k) == values(k,j) bitwise.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(Index dim) : values_(Matrix::Zero(dim, dim)) {}

  explicit SymmetricMatrix(const Eigen::Ref<const Matrix>& m) {
    detail::require(m.rows() == m.cols(), ErrorCode::DimensionMismatch,
                    "symmetric matrix must be square");
    values_ = m.triangularView<Eigen::Upper>();
    values_.triangularView<Eigen::StrictlyLower>() = values_.transpose();
  }

  static SymmetricMatrix identity(Index dim) {
    SymmetricMatrix s(dim);
    s.values_.setIdentity();
    return s;
  }

  Index dim() const noexcept { return values_.rows(); }
  double operator()(Index j, Index k) const { return values_(j, k); }
  const Matrix& values() const noexcept { return values_; }

  SymmetricMatrix scaled(double c) const {
    SymmetricMatrix out = *this;
    out.values_ *= c;
    return out;
  }

 private:
  Matrix values_;
};

struct SvdResult {
  Matrix u;      ///< rows x k, orthonormal columns (k = min(rows, cols))
  Vector sigma;  ///< descending, non-negative
  Matrix v;      ///< cols x k, orthonormal columns
  Index rank = 0;
  double tolerance = 0.0;
};

struct SymEigResult {
  Vector values;   ///< descending
  Matrix vectors;  ///< columns are eigenvectors, same order as values
};

namespace detail {

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) fail(ErrorCode::NumericalFailure, std::string(what) + ": non-finite entries");
}

}  // namespace detail

inline DataMatrix center_columns(const DataMatrix& x) {
  Matrix centered = x.values().rowwise() - x.values().colwise().mean();
  return DataMatrix(std::move(centered), true);
}

/// Thin SVD with the numerical rank cut at max(rows, cols) * eps * sigma[0].
inline SvdResult thin_svd(const Eigen::Ref<const Matrix>& m) {
  detail::require_finite(m, "thin_svd");
  SvdResult out;
  if (m.size() == 0) return out;
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    detail::fail(ErrorCode::NumericalFailure, "SVD did not converge");
  }
  out.u = svd.matrixU();
  out.sigma = svd.singularValues();
  out.v = svd.matrixV();
  const double top = out.sigma.size() > 0 ? out.sigma(0) : 0.0;
  out.tolerance = static_cast<double>(std::max(m.rows(), m.cols())) *
                  std::numeric_limits<double>::epsilon() * top;
  out.rank = (out.sigma.array() > out.tolerance).count();
  return out;
}

/// Orthogonal projection onto the row space of m, V_r V_r^T.
inline SymmetricMatrix row_space_projection(const Eigen::Ref<const Matrix>& m) {
  const SvdResult svd = thin_svd(m);
  detail::require(svd.rank > 0, ErrorCode::DegenerateRank, "input has numerical rank 0");
  const auto basis = svd.v.leftCols(svd.rank);
  Matrix proj = basis * basis.transpose();
  return SymmetricMatrix(proj);
}

inline SymEigResult sym_eig(const SymmetricMatrix& s) {
  detail::require_finite(s.values(), "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.values());
  if (solver.info() != Eigen::Success) {
    detail::fail(ErrorCode::NumericalFailure, "eigen decomposition did not converge");
  }
  SymEigResult out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

}  // namespace confcov
