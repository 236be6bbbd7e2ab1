#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace ptf;

TEST(Topology, SingleFollowerPinned) {
  const Topology t = build_topology(Matrix(1, 1), {1});
  EXPECT_EQ(t.h_matrix(), (Matrix{{1}}));
  EXPECT_DOUBLE_EQ(lambda_min_H(t), 1.0);
}

TEST(Topology, TwoFollowersOneEdge) {
  const Topology t = topology_from_edges(2, {{1, 2, 1.0}}, {1});
  EXPECT_EQ(t.h_matrix(), (Matrix{{2, -1}, {-1, 1}}));
  EXPECT_NEAR(lambda_min_H(t), (3.0 - std::sqrt(5.0)) / 2.0, 1e-12);
}

TEST(Topology, PathAndCycleArePositiveDefinite) {
  const Topology path = topology_from_edges(5, {{1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {4, 5, 1}}, {1});
  EXPECT_GT(lambda_min_H(path), 0.0);
  const Topology cycle = topology_from_edges(5, {{1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {4, 5, 1}, {5, 1, 1}}, {1});
  EXPECT_GT(lambda_min_H(cycle), 0.0);
  EXPECT_NEAR(lambda_min_H(cycle), lambda_min(cycle.h_matrix()), 1e-12);
}

TEST(Topology, LambdaMinBelowSmallestDiagonalEntry) {
  const Topology t = topology_from_edges(4, {{1, 2, 0.5}, {2, 3, 2.0}, {3, 4, 1.5}, {1, 4, 0.25}}, {2, 4});
  double dmin = INFINITY;
  for (std::size_t i = 0; i < 4; ++i) dmin = std::min(dmin, t.h_matrix()(i, i));
  EXPECT_LE(lambda_min_H(t), dmin);
}

TEST(Topology, LaplacianRowsSumToZeroAndHIsSymmetric) {
  const Topology t = topology_from_edges(5, {{1, 2, 0.3}, {2, 3, 1.7}, {3, 4, 1}, {4, 5, 2.2}, {5, 1, 0.9}}, {3});
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += t.laplacian()(i, j);
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
  EXPECT_EQ(t.h_matrix(), t.h_matrix().transpose());
}

TEST(Topology, RejectsDirectedGraph) {
  Matrix adj(2, 2);
  adj(0, 1) = 1.0;
  EXPECT_THROW(build_topology(adj, {1, 0}), NotSymmetric);
}

TEST(Topology, RejectsDisconnectedGraph) {
  EXPECT_THROW(topology_from_edges(3, {{1, 2, 1}}, {1}), NotConnected);
}

TEST(Topology, RejectsGraphWithoutLeaderAccess) {
  EXPECT_THROW(topology_from_edges(2, {{1, 2, 1}}, {}), NotConnected);
}

TEST(Topology, RejectsBadWeights) {
  Matrix adj(2, 2);
  adj(0, 1) = adj(1, 0) = -1.0;
  EXPECT_THROW(build_topology(adj, {1, 1}), ValidationError);
  Matrix loop(2, 2);
  loop(0, 0) = 1.0;
  EXPECT_THROW(build_topology(loop, {1, 1}), ValidationError);
}

TEST(Topology, NeighboursFollowNonzeroWeights) {
  const Topology t = topology_from_edges(4, {{1, 2, 1}, {2, 3, 1}, {3, 4, 1}}, {1});
  EXPECT_EQ(t.neighbors(1), (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(t.pinned(0));
  EXPECT_FALSE(t.pinned(3));
}
