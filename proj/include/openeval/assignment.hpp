#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "openeval/types.hpp"

namespace openeval {

/// Weights of the three matching cost terms.
struct MatchWeights {
  double cls = 1.0;
  double l1 = 5.0;
  double giou = 2.0;
};

/// Query-by-ground-truth cost matrix (rows = queries, cols = GT objects).
struct CostMatrix {
  Eigen::MatrixXd values;
  MatchWeights weights{};

  Eigen::Index queries() const { return values.rows(); }
  Eigen::Index objects() const { return values.cols(); }
};

struct ImageSize {
  double width = 0;
  double height = 0;
};

/// pairs are (query, gt) sorted by gt index; every gt appears exactly once.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;
  double total_cost = 0.0;

  /// -1 for unmatched queries.
  std::vector<int> gt_for_query(int num_queries) const;
};

/// entry(i, j) = w.cls * -ln p_i + w.l1 * |n(b_i) - n(g_j)|_1 + w.giou * (1 - giou(b_i, g_j))
/// with n() the image-normalized cxcywh box. Throws DomainError for p outside (0,1),
/// ValidationError for mismatched lengths, negative weights or a non-positive image size.
CostMatrix build_cost_matrix(std::span<const BoundingBox> pred_boxes,
                             std::span<const double> pred_fg_probs,
                             std::span<const BoundingBox> gt_boxes, MatchWeights weights,
                             ImageSize image_size);

/// Minimum-cost assignment of every GT column to a distinct query row
/// (Hungarian / shortest augmenting path, O(M^2 N)). Among optimal
/// assignments the one whose query list, read in gt order, is
/// lexicographically smallest is returned. Throws InfeasibleError if M > N.
Assignment solve_assignment(const CostMatrix& costs);

/// Exhaustive reference with the same contract. Throws SizeLimitError for
/// M > 8 or N > 12.
Assignment brute_force_assignment(const CostMatrix& costs);

}  // namespace openeval
