// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hpc/geometry.hpp"
#include "hpc/kernel_priors.hpp"

namespace hpc {

/// Aggregators usable wherever a set of shortest distances is reduced to one
/// value. All three distribute over disjoint multiset union:
/// f({f(A)} u {f(B)}) = f(A u B) (exactly for Max/Min, to rounding for Sum).
enum class DistributiveFn { Max = 0, Min = 1, Sum = 2 };

const char* to_string(DistributiveFn f);
DistributiveFn distributive_fn_from_string(const std::string& name);

/// Order-independent sum: accumulates ascending so permutations of the input
/// produce bit-identical results.
double sum_sorted(std::vector<double> values);

/// max_{a in A} min_{b in B} |a - b|. Both sets must be non-empty.
double directed_hausdorff(std::span<const Point3> a, std::span<const Point3> b);

/// Shortest distances between a neighborhood Q (m points) and a kernel G
/// (n points), with argmin partners. Ties resolve to the lowest index.
struct ShortestDistanceSet {
  std::vector<double> d_q;      // per Q point: distance to nearest G point
  std::vector<int> d_q_argmin;  // per Q point: index of that G point
  std::vector<double> d_g;      // per G point: distance to nearest Q point
  std::vector<int> d_g_argmin;  // per G point: index of that Q point
};

/// O(n*m) pass computing both distance multisets. Q and G must be non-empty.
ShortestDistanceSet shortest_distance_set(std::span<const Point3> q, std::span<const Point3> g);

/// Generalized symmetric Hausdorff value: f over the combined multiset
/// d_q u d_g. For Max this is the classic symmetric Hausdorff distance.
double hausdorff(std::span<const Point3> a, std::span<const Point3> b, DistributiveFn f);

/// Sparse n x m matrix over (kernel point j, neighbor i) pairs. Presence of
/// an entry is explicit: a stored 0.0 is distinct from an absent entry.
/// Entries are kept sorted by (row, col).
struct ShortestDistanceMatrix {
  struct Entry {
    int row;  // kernel point j
    int col;  // neighbor i
    double value;
  };
  int rows = 0;        // n kernel points
  int cols = 0;        // m neighbors
  double radius = 0.0; // query radius the matrix was built for
  std::vector<Entry> entries;

  int nnz() const { return static_cast<int>(entries.size()); }
  /// Pointer to the stored entry or nullptr when (row, col) is absent.
  const double* at(int row, int col) const;
};

/// Sparse shortest-distance matrix: entry (j, i) is stored when the pair
/// realizes d_q[i] or d_g[j]. nnz <= n + m by construction.
ShortestDistanceMatrix build_dmin(const ShortestDistanceSet& s, int n, int m, double radius);

/// Dense ablation variant: every (j, i) pair stored with |g_j - q_i|.
/// Exactly n*m entries.
ShortestDistanceMatrix dense_distance_matrix(std::span<const Point3> q,
                                             std::span<const Point3> g, double radius);

/// Rewrites every stored entry as the similarity 1 - value / radius, clamped
/// to [-1, 1]. Absent entries stay absent. Requires radius > 0.
ShortestDistanceMatrix normalize_similarity(const ShortestDistanceMatrix& d);

/// Per-point normalized Hausdorff response of a cloud against a kernel prior
/// scaled to radius r. The neighborhood of a point includes the point itself;
/// a point with no other neighbor inside r is isolated and gets the sentinel
/// 1.0 (maximal dissimilarity). Values are divided by r, and additionally by
/// (m + n) for Sum, so well-matched neighborhoods score near 0.
std::vector<double> response_map(const PointCloud& cloud, const KernelPrior& kernel, double r,
                                 DistributiveFn f, int threads = 1);

}  // namespace hpc
