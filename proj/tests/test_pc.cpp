#include <gtest/gtest.h>

#include "confcov/pc.hpp"
#include "test_support.hpp"

namespace confcov {
namespace {

using EdgeList = std::set<std::pair<Index, Index>>;

using testing::residual_partial_correlation;

SymmetricMatrix chain() { return testing::chain_dag(); }
SymmetricMatrix collider() { return testing::collider_dag(); }
SymmetricMatrix diamond() { return testing::diamond_dag(); }

TEST(PartialCorrelation, Examples) {
  const SymmetricMatrix id = SymmetricMatrix::identity(4);
  EXPECT_EQ(*partial_correlation(id, 0, 1, {}), 0.0);
  EXPECT_NEAR(*partial_correlation(id, 0, 3, {1, 2}), 0.0, 1e-15);

  Matrix two(2, 2);
  two << 1, 0.3, 0.3, 1;
  EXPECT_NEAR(*partial_correlation(SymmetricMatrix(two), 0, 1, {}), 0.3, 1e-15);

  EXPECT_NEAR(*partial_correlation(chain(), 0, 2, {1}), 0.0, 1e-10);
}

TEST(PartialCorrelation, MatchesResidualOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SymmetricMatrix s = testing::random_spd(6, seed);
    for (const auto& cond : std::vector<std::vector<Index>>{{}, {2}, {4, 2}, {1, 3, 5}}) {
      const Index k = std::find(cond.begin(), cond.end(), 4) == cond.end() ? 4 : 5;
      EXPECT_NEAR(*partial_correlation(s, 0, k, cond), residual_partial_correlation(s, 0, k, cond), 1e-12);
    }
  }
}

TEST(PartialCorrelation, SingularBlockIsNotInvertible) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 2) = m(2, 0) = 1.0;
  EXPECT_FALSE(partial_correlation(SymmetricMatrix(m), 0, 1, {2}).has_value());
  EXPECT_FALSE(ci_test(SymmetricMatrix(m), 0, 1, {2}, 0.0));
  EXPECT_THROW(partial_correlation(SymmetricMatrix(m), 0, 0, {}), Error);
  EXPECT_THROW(partial_correlation(SymmetricMatrix(m), 0, 1, {1}), Error);
}

TEST(PartialCorrelation, ExactlySymmetric) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SymmetricMatrix s = testing::random_spd(7, 100 + seed);
    EXPECT_EQ(*partial_correlation(s, 1, 5, {3, 0}), *partial_correlation(s, 5, 1, {0, 3}));
    EXPECT_EQ(*partial_correlation(s, 6, 2, {}), *partial_correlation(s, 2, 6, {}));
  }
}

// Floating-point rescaling perturbs inputs by an ulp, so "exact" is checked to 1e-12.
TEST(PartialCorrelation, ScaleInvariance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SymmetricMatrix s = testing::random_spd(6, 200 + seed);
    const double base = *partial_correlation(s, 0, 3, {1, 5});
    for (double c : {0.1, 1.0, 10.0, 1e-6, 1e6}) {
      EXPECT_NEAR(*partial_correlation(s.scaled(c), 0, 3, {1, 5}), base, 1e-12);
    }
  }
}

TEST(CiTest, Examples) {
  const SymmetricMatrix id = SymmetricMatrix::identity(3);
  for (double tau : {0.01, 0.5, 1.0}) EXPECT_FALSE(ci_test(id, 0, 2, {1}, tau));
  Matrix two(2, 2);
  two << 1, 0.5, 0.5, 1;
  EXPECT_TRUE(ci_test(SymmetricMatrix(two), 0, 1, {}, 0.4));
  EXPECT_FALSE(ci_test(SymmetricMatrix(two), 0, 1, {}, 0.6));
  EXPECT_TRUE(ci_test(id, 0, 1, {}, 0.0));
  EXPECT_THROW(ci_test(id, 0, 1, {}, 1.5), Error);
}

TEST(PcSkeleton, IdentityIsEmpty) {
  for (double tau : {0.01, 0.3, 0.9}) {
    const Skeleton sk = pc_skeleton(SymmetricMatrix::identity(5), tau, 3);
    EXPECT_TRUE(sk.edges.empty());
    EXPECT_EQ(sk.sepsets.size(), 10u);
  }
}

TEST(PcSkeleton, ChainAndCollider) {
  const Skeleton c = pc_skeleton(chain(), 0.05, 1);
  EXPECT_EQ(c.edges.edges(), (EdgeList{{0, 1}, {1, 2}}));
  EXPECT_EQ(c.sepsets.at({0, 2}), (std::vector<Index>{1}));

  const Skeleton v = pc_skeleton(collider(), 0.05, 1);
  EXPECT_EQ(v.edges.edges(), (EdgeList{{0, 2}, {1, 2}}));
  EXPECT_TRUE(v.sepsets.at({0, 1}).empty());
}

TEST(CpdagOrient, Examples) {
  EdgeSet chain_sk(3);
  chain_sk.insert(0, 1);
  chain_sk.insert(1, 2);
  Cpdag g = cpdag_orient(chain_sk, {{{0, 2}, {1}}});
  EXPECT_TRUE(g.directed.empty());
  EXPECT_EQ(g.undirected, (EdgeList{{0, 1}, {1, 2}}));

  EdgeSet coll_sk(3);
  coll_sk.insert(0, 2);
  coll_sk.insert(1, 2);
  g = cpdag_orient(coll_sk, {{{0, 1}, {}}});
  EXPECT_EQ(g.directed, (EdgeList{{0, 2}, {1, 2}}));
  EXPECT_TRUE(g.undirected.empty());

  g = cpdag_orient(EdgeSet(4), {});
  EXPECT_TRUE(g.directed.empty());
  EXPECT_TRUE(g.undirected.empty());
}

TEST(CpdagOrient, MeekRuleOnePropagates) {
  // 0 -> 2 <- 1 and 2 - 3 with 3 not adjacent to 0 or 1: rule 1 orients 2 -> 3
  EdgeSet sk(4);
  sk.insert(0, 2);
  sk.insert(1, 2);
  sk.insert(2, 3);
  const Cpdag g = cpdag_orient(sk, {{{0, 1}, {}}, {{0, 3}, {2}}, {{1, 3}, {2}}});
  EXPECT_EQ(g.directed, (EdgeList{{0, 2}, {1, 2}, {2, 3}}));
  EXPECT_TRUE(g.undirected.empty());
}

TEST(CpdagOrient, ConflictsStayUndirected) {
  // a 4-cycle with all sepsets empty asks for both directions on every edge
  EdgeSet sk(4);
  sk.insert(0, 1);
  sk.insert(1, 2);
  sk.insert(2, 3);
  sk.insert(0, 3);
  const Cpdag g = cpdag_orient(sk, {{{0, 2}, {}}, {{1, 3}, {}}});
  EXPECT_EQ(g.conflicts.size(), 4u);
  EXPECT_TRUE(g.directed.empty());
  EXPECT_EQ(g.undirected.size(), 4u);
}

TEST(PcAlgorithm, OracleRecoveryOverTauGrid) {
  struct Case {
    const char* name;
    SymmetricMatrix sigma;
    EdgeList directed;
    EdgeList undirected;
  };
  const std::vector<Case> cases{
      {"chain", chain(), {}, {{0, 1}, {1, 2}}},
      {"collider", collider(), {{0, 2}, {1, 2}}, {}},
      {"diamond", diamond(), {{1, 3}, {2, 3}}, {{0, 1}, {0, 2}}},
  };
  for (const auto& c : cases) {
    const Index p = c.sigma.dim();
    const double omega = *cpdag_diagnostics(c.sigma, p - 2).omega_min;
    ASSERT_GT(omega, 0.03) << c.name;
    for (double tau = 0.01; tau < omega - 0.01; tau += 0.005) {
      const Cpdag g = pc_algorithm(c.sigma, tau, p - 2);
      EXPECT_EQ(g.directed, c.directed) << c.name << " tau " << tau;
      EXPECT_EQ(g.undirected, c.undirected) << c.name << " tau " << tau;
      EXPECT_TRUE(g.conflicts.empty());
    }
  }
}

TEST(PcAlgorithm, OutputInvariantToRescaling) {
  const SymmetricMatrix s = diamond();
  const Cpdag base = pc_algorithm(s, 0.1, 2);
  for (double c : {0.1, 10.0, 1e-4}) {
    const Cpdag g = pc_algorithm(s.scaled(c), 0.1, 2);
    EXPECT_EQ(g.directed, base.directed);
    EXPECT_EQ(g.undirected, base.undirected);
    EXPECT_EQ(g.sepsets, base.sepsets);
  }
}

TEST(PcAlgorithm, DirectedAndUndirectedAreDisjoint) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SymmetricMatrix s = testing::random_spd(8, 300 + seed, 0.3);
    const Cpdag g = pc_algorithm(s, 0.15, 3);
    for (const auto& [a, b] : g.directed) {
      EXPECT_FALSE(g.directed.count({b, a}));
      EXPECT_FALSE(g.undirected.count({std::min(a, b), std::max(a, b)}));
    }
  }
}

TEST(CpdagDiagnostics, Examples) {
  const CpdagDiagnostics id = cpdag_diagnostics(SymmetricMatrix::identity(4), 2);
  EXPECT_FALSE(id.omega_min.has_value());
  EXPECT_NEAR(id.sigma_r, 1.0, 1e-15);

  Matrix two(2, 2);
  two << 1, 0.5, 0.5, 1;
  EXPECT_NEAR(*cpdag_diagnostics(SymmetricMatrix(two), 0).omega_min, 0.5, 1e-15);
  EXPECT_THROW(cpdag_diagnostics(SymmetricMatrix::identity(16), 1), Error);
  EXPECT_THROW(cpdag_diagnostics(SymmetricMatrix::identity(5), 5), Error);
}

TEST(CpdagDiagnostics, ChainMatchesBruteForce) {
  const SymmetricMatrix s = chain();
  double omega = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < 3; ++j)
    for (Index k = j + 1; k < 3; ++k) {
      const Index other = 3 - j - k;
      for (const auto& cond : std::vector<std::vector<Index>>{{}, {other}}) {
        const double r = std::abs(residual_partial_correlation(s, j, k, cond));
        if (r > 1e-10) omega = std::min(omega, r);
      }
    }
  const CpdagDiagnostics d = cpdag_diagnostics(s, 1);
  EXPECT_NEAR(*d.omega_min, omega, 1e-12);
  EXPECT_NEAR(d.sigma_r, Eigen::SelfAdjointEigenSolver<Matrix>(s.values()).eigenvalues()(0), 1e-12);
}

}  // namespace
}  // namespace confcov
