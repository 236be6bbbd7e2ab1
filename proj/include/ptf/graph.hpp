#pragma once

#include <cstddef>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "ptf/linalg.hpp"

namespace ptf {

/// Undirected follower graph plus leader pinning. Holds L, H = L + diag(b)
/// and the extreme eigenvalues of H. Only constructible through
/// `build_topology`, so every instance satisfies the connectivity checks.
class Topology {
 public:
  std::size_t size() const { return leader_access_.size(); }
  const Matrix& adjacency() const { return adjacency_; }
  const std::vector<int>& leader_access() const { return leader_access_; }
  bool pinned(std::size_t i) const { return leader_access_.at(i) != 0; }
  double weight(std::size_t i, std::size_t j) const { return adjacency_(i, j); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
  const Matrix& laplacian() const { return laplacian_; }
  const Matrix& h_matrix() const { return h_; }
  double lambda_min_h() const { return lambda_min_h_; }
  double lambda_max_h() const { return lambda_max_h_; }

 private:
  friend Topology build_topology(const Matrix& adjacency, const std::vector<int>& leader_access);

  Matrix adjacency_;
  std::vector<int> leader_access_;
  std::vector<std::vector<std::size_t>> neighbors_;
  Matrix laplacian_;
  Matrix h_;
  double lambda_min_h_ = 0.0;
  double lambda_max_h_ = 0.0;
};

inline Topology build_topology(const Matrix& adjacency, const std::vector<int>& leader_access) {
  const std::size_t n = adjacency.rows();
  if (!adjacency.is_square()) throw DimensionMismatch("adjacency not square: " + adjacency.shape());
  if (leader_access.size() != n) {
    throw DimensionMismatch("leader_access has " + std::to_string(leader_access.size()) +
                            " entries for " + std::to_string(n) + " followers");
  }
  if (n == 0) throw ValidationError("Assumption 1: no followers");
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw ValidationError("adjacency diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency(i, j) < 0.0) throw ValidationError("adjacency weights must be nonnegative");
      if (adjacency(i, j) != adjacency(j, i)) {
        throw NotSymmetric("Assumption 1: follower graph must be undirected (a_" +
                           std::to_string(i + 1) + std::to_string(j + 1) + " != a_" +
                           std::to_string(j + 1) + std::to_string(i + 1) + ")");
      }
    }
    if (leader_access[i] != 0 && leader_access[i] != 1) {
      throw ValidationError("leader access flags must be 0 or 1");
    }
  }

  Topology t;
  t.adjacency_ = adjacency;
  t.leader_access_ = leader_access;
  t.neighbors_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency(i, j) > 0.0) t.neighbors_[i].push_back(j);

  // Reachability from the pinned set over nonzero edges.
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i)
    if (leader_access[i] == 1) {
      seen[i] = true;
      frontier.push(i);
    }
  if (frontier.empty()) throw NotConnected("Assumption 1: no follower has access to the leader");
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    for (std::size_t j : t.neighbors_[i])
      if (!seen[j]) {
        seen[j] = true;
        frontier.push(j);
      }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) {
      throw NotConnected("Assumption 1: no path from the leader to follower " + std::to_string(i + 1));
    }

  t.laplacian_ = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      deg += adjacency(i, j);
      t.laplacian_(i, j) = -adjacency(i, j);
    }
    t.laplacian_(i, i) = deg;
  }
  t.h_ = t.laplacian_;
  for (std::size_t i = 0; i < n; ++i) t.h_(i, i) += leader_access[i];
  t.h_ = symmetrize(t.h_);

  const auto eig = eig_sym(t.h_);
  t.lambda_min_h_ = eig.values.front();
  t.lambda_max_h_ = eig.values.back();
  if (!(t.lambda_min_h_ > 0.0)) {
    throw HNotPositiveDefinite("H = L + B is not positive definite (lambda_min " +
                               std::to_string(t.lambda_min_h_) + ")");
  }
  return t;
}

/// Edge-list convenience: 1-based (i, j, weight) triples, 1-based pinned ids.
inline Topology topology_from_edges(std::size_t n,
                                    const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
                                    const std::vector<std::size_t>& pinned) {
  Matrix adj(n, n);
  for (const auto& [i, j, w] : edges) {
    if (i < 1 || j < 1 || i > n || j > n) throw ValidationError("edge endpoint out of range");
    if (i == j) throw ValidationError("self loops are not allowed");
    adj(i - 1, j - 1) = w;
    adj(j - 1, i - 1) = w;
  }
  std::vector<int> access(n, 0);
  for (std::size_t p : pinned) {
    if (p < 1 || p > n) throw ValidationError("pinned follower out of range");
    access[p - 1] = 1;
  }
  return build_topology(adj, access);
}

inline double lambda_min_H(const Topology& t) { return t.lambda_min_h(); }

}  // namespace ptf
