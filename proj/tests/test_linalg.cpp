#include <gtest/gtest.h>

#include "confcov/linalg.hpp"
#include "test_support.hpp"

namespace confcov {
namespace {

using testing::gaussian;
using testing::max_abs;

TEST(CenterColumns, SubtractsColumnMeans) {
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const DataMatrix c = center_columns(DataMatrix(x));
  Matrix expected(2, 2);
  expected << -1, -1, 1, 1;
  EXPECT_TRUE(c.centered());
  EXPECT_EQ(c.values(), expected);
}

TEST(CenterColumns, ConstantColumnBecomesZero) {
  Matrix x = gaussian(5, 3, 1);
  x.col(1).setConstant(4.25);
  const DataMatrix c = center_columns(DataMatrix(x));
  EXPECT_TRUE(c.values().col(1).isZero(0.0));
}

TEST(CenterColumns, ColumnSumsVanish) {
  const DataMatrix c = center_columns(DataMatrix(gaussian(6, 10, 2)));
  EXPECT_LT(c.values().colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CenterColumns, RejectsSingleRow) {
  try {
    DataMatrix x(Matrix::Ones(1, 4));
    FAIL() << "expected RowCountTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RowCountTooSmall);
  }
}

TEST(ThinSvd, Identity) {
  const SvdResult svd = thin_svd(Matrix::Identity(2, 2));
  EXPECT_NEAR(svd.sigma(0), 1.0, 1e-15);
  EXPECT_NEAR(svd.sigma(1), 1.0, 1e-15);
  EXPECT_EQ(svd.rank, 2);
}

TEST(ThinSvd, DiagonalRankOne) {
  Matrix m(2, 2);
  m << 3, 0, 0, 0;
  const SvdResult svd = thin_svd(m);
  EXPECT_NEAR(svd.sigma(0), 3.0, 1e-15);
  EXPECT_EQ(svd.sigma(1), 0.0);
  EXPECT_EQ(svd.rank, 1);
}

TEST(ThinSvd, ReconstructsAndIsOrthonormal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix m = gaussian(4, 7, 100 + seed);
    const SvdResult svd = thin_svd(m);
    const Matrix rebuilt = svd.u * svd.sigma.asDiagonal() * svd.v.transpose();
    EXPECT_LT(max_abs(rebuilt - m), 1e-10);
    EXPECT_LT(max_abs(svd.u.transpose() * svd.u - Matrix::Identity(4, 4)), 1e-10);
    EXPECT_LT(max_abs(svd.v.transpose() * svd.v - Matrix::Identity(4, 4)), 1e-10);
    for (Index i = 1; i < svd.sigma.size(); ++i) EXPECT_GE(svd.sigma(i - 1), svd.sigma(i));
  }
}

TEST(ThinSvd, NonFiniteInputFails) {
  Matrix m = Matrix::Ones(3, 3);
  m(1, 2) = std::nan("");
  EXPECT_THROW(thin_svd(m), Error);
}

TEST(RowSpaceProjection, RankOneSpan) {
  Matrix m(2, 2);
  m << 1, 0, -1, 0;
  const SymmetricMatrix p = row_space_projection(m);
  Matrix expected(2, 2);
  expected << 1, 0, 0, 0;
  EXPECT_LT(max_abs(p.values() - expected), 1e-15);
}

TEST(RowSpaceProjection, FullRankIsIdentity) {
  const SymmetricMatrix p = row_space_projection(Matrix::Identity(3, 3));
  EXPECT_LT(max_abs(p.values() - Matrix::Identity(3, 3)), 1e-15);
}

TEST(RowSpaceProjection, MatchesPseudoInverseFormula) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = gaussian(5, 40, 200 + seed);
    const Matrix oracle = m.transpose() * (m * m.transpose()).llt().solve(m);
    EXPECT_LT(max_abs(row_space_projection(m).values() - oracle), 1e-9);
  }
}

TEST(RowSpaceProjection, ZeroInputIsDegenerate) {
  try {
    row_space_projection(Matrix::Zero(3, 5));
    FAIL() << "expected DegenerateRank";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRank);
  }
}

// Random inputs, including exactly rank-deficient products A B.
TEST(RowSpaceProjection, ProjectionInvariants) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const Index rows = 2 + static_cast<Index>(rng() % 10);
    const Index cols = 2 + static_cast<Index>(rng() % 30);
    const Index inner = 1 + static_cast<Index>(rng() % std::min(rows, cols));
    const bool deficient = seed % 2 == 1;
    const Matrix m = deficient ? Matrix(gaussian(rows, inner, 300 + seed) * gaussian(inner, cols, 400 + seed))
                               : gaussian(rows, cols, 300 + seed);
    const Index expected_rank = deficient ? inner : std::min(rows, cols);

    const SymmetricMatrix p = row_space_projection(m);
    const SvdResult svd = thin_svd(m);
    EXPECT_EQ(svd.rank, expected_rank) << "seed " << seed;
    EXPECT_EQ(p.values(), p.values().transpose());
    EXPECT_LT(max_abs(p.values() * p.values() - p.values()), 1e-9);
    EXPECT_NEAR(p.values().trace(), static_cast<double>(svd.rank), 1e-8);
    const SymEigResult eig = sym_eig(p);
    for (Index i = 0; i < eig.values.size(); ++i) {
      const double v = eig.values(i);
      EXPECT_LT(std::min(std::abs(v), std::abs(v - 1.0)), 1e-8);
    }
  }
}

TEST(RowSpaceProjection, InvariantToLeftMultiplication) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = gaussian(6, 25, 500 + seed);
    Matrix left = gaussian(6, 6, 600 + seed);
    left.diagonal().array() += 3.0;  // comfortably invertible
    EXPECT_LT(max_abs(row_space_projection(left * m).values() - row_space_projection(m).values()), 1e-8);
  }
}

TEST(RowSpaceProjection, SignOfSingularVectorsIrrelevant) {
  const Matrix m = gaussian(5, 12, 700);
  const SvdResult svd = thin_svd(m);
  Matrix v = svd.v.leftCols(svd.rank);
  const Matrix before = v * v.transpose();
  v.col(2) *= -1.0;
  const Matrix after = v * v.transpose();
  EXPECT_LT(max_abs(before - after), 1e-15);
  EXPECT_LT(max_abs(row_space_projection(m).values() - after), 1e-12);
}

TEST(SymEig, Diagonal) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const SymEigResult eig = sym_eig(SymmetricMatrix(d));
  EXPECT_NEAR(eig.values(0), 3.0, 1e-15);
  EXPECT_NEAR(eig.values(1), 2.0, 1e-15);
  EXPECT_NEAR(eig.values(2), 1.0, 1e-15);
}

TEST(SymEig, Swap) {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  const SymEigResult eig = sym_eig(SymmetricMatrix(s));
  EXPECT_NEAR(eig.values(0), 1.0, 1e-15);
  EXPECT_NEAR(eig.values(1), -1.0, 1e-15);
}

TEST(SymEig, Reconstructs) {
  const Matrix a = gaussian(8, 8, 800);
  const SymmetricMatrix s(Matrix(a + a.transpose()));
  const SymEigResult eig = sym_eig(s);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  EXPECT_LT(max_abs(eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose() - s.values()), 1e-9 * scale);
  EXPECT_LT(max_abs(eig.vectors.transpose() * eig.vectors - Matrix::Identity(8, 8)), 1e-10);
  for (Index i = 1; i < 8; ++i) EXPECT_GE(eig.values(i - 1), eig.values(i));
}

TEST(SymmetricMatrix, StorageIsExactlySymmetric) {
  const Matrix a = gaussian(6, 6, 900);
  const SymmetricMatrix s(a);
  EXPECT_EQ(s.values(), s.values().transpose());
  EXPECT_EQ(s(0, 5), a(0, 5));
}

}  // namespace
}  // namespace confcov
