#include "openeval/assignment.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "openeval/geometry.hpp"

namespace openeval {

std::vector<int> Assignment::gt_for_query(int num_queries) const {
  std::vector<int> out(static_cast<std::size_t>(num_queries), -1);
  for (const auto& [q, g] : pairs) out[static_cast<std::size_t>(q)] = g;
  return out;
}

CostMatrix build_cost_matrix(std::span<const BoundingBox> pred_boxes,
                             std::span<const double> pred_fg_probs,
                             std::span<const BoundingBox> gt_boxes, MatchWeights weights,
                             ImageSize image_size) {
  if (pred_boxes.size() != pred_fg_probs.size()) {
    throw ValidationError("pred_boxes and pred_fg_probs must have equal length");
  }
  if (!(image_size.width > 0 && image_size.height > 0)) {
    throw ValidationError("image size must be positive");
  }
  if (!(weights.cls >= 0 && weights.l1 >= 0 && weights.giou >= 0)) {
    throw ValidationError("matching weights must be non-negative");
  }
  const auto n = static_cast<Eigen::Index>(pred_boxes.size());
  const auto m = static_cast<Eigen::Index>(gt_boxes.size());

  Eigen::Matrix4Xd gt_norm(4, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    gt_norm.col(j) = normalized_cxcywh(gt_boxes[static_cast<std::size_t>(j)],
                                       image_size.width, image_size.height);
  }

  CostMatrix out;
  out.weights = weights;
  out.values.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = pred_fg_probs[static_cast<std::size_t>(i)];
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError(fmt::format("foreground probability {} of query {} outside (0,1)", p, i));
    }
    const BoundingBox& b = pred_boxes[static_cast<std::size_t>(i)];
    const Eigen::Vector4d bn = normalized_cxcywh(b, image_size.width, image_size.height);
    const double cls = -std::log(p);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double l1 = (bn - gt_norm.col(j)).cwiseAbs().sum();
      const double g = giou(b, gt_boxes[static_cast<std::size_t>(j)]);
      out.values(i, j) = weights.cls * cls + weights.l1 * l1 + weights.giou * (1.0 - g);
    }
  }
  return out;
}

namespace {

void check_costs(const CostMatrix& costs) {
  if (!costs.values.allFinite()) throw ValidationError("cost matrix has non-finite entries");
  if (costs.objects() > costs.queries()) {
    throw InfeasibleError(fmt::format("cannot assign {} ground-truth objects to {} queries",
                                      costs.objects(), costs.queries()));
  }
}

double total_of(const CostMatrix& costs, const std::vector<int>& query_of_gt) {
  double total = 0.0;
  for (std::size_t g = 0; g < query_of_gt.size(); ++g) {
    total += costs.values(query_of_gt[g], static_cast<Eigen::Index>(g));
  }
  return total;
}

Assignment make_assignment(const CostMatrix& costs, const std::vector<int>& query_of_gt) {
  Assignment a;
  a.pairs.reserve(query_of_gt.size());
  for (std::size_t g = 0; g < query_of_gt.size(); ++g) {
    a.pairs.emplace_back(query_of_gt[g], static_cast<int>(g));
  }
  a.total_cost = total_of(costs, query_of_gt);
  return a;
}

// Bipartite graph of zero-reduced-cost edges, GT rows x query columns.
class TightGraph {
 public:
  TightGraph(int rows, int cols) : rows_(rows), cols_(cols), adj_(static_cast<std::size_t>(rows)),
                                   radj_(static_cast<std::size_t>(cols)) {}

  void add(int r, int c) {
    adj_[static_cast<std::size_t>(r)].push_back(c);
    radj_[static_cast<std::size_t>(c)].push_back(r);
  }
  const std::vector<int>& row(int r) const { return adj_[static_cast<std::size_t>(r)]; }

  // True when rows [first_row, rows) can all be matched into free columns.
  bool rows_saturable(int first_row, const std::vector<char>& col_used) const {
    std::vector<int> match_col(static_cast<std::size_t>(cols_), -1);
    for (int r = first_row; r < rows_; ++r) {
      std::vector<char> seen(static_cast<std::size_t>(cols_), 0);
      if (!augment_row(r, col_used, match_col, seen)) return false;
    }
    return true;
  }

  // True when every free column in `required` can be matched to a row in
  // [first_row, rows).
  bool cols_saturable(int first_row, const std::vector<char>& col_used,
                      const std::vector<char>& required) const {
    std::vector<int> match_row(static_cast<std::size_t>(rows_), -1);
    for (int c = 0; c < cols_; ++c) {
      if (!required[static_cast<std::size_t>(c)] || col_used[static_cast<std::size_t>(c)]) continue;
      std::vector<char> seen(static_cast<std::size_t>(rows_), 0);
      if (!augment_col(c, first_row, match_row, seen)) return false;
    }
    return true;
  }

 private:
  bool augment_row(int r, const std::vector<char>& col_used, std::vector<int>& match_col,
                   std::vector<char>& seen) const {
    for (int c : adj_[static_cast<std::size_t>(r)]) {
      const auto uc = static_cast<std::size_t>(c);
      if (col_used[uc] || seen[uc]) continue;
      seen[uc] = 1;
      if (match_col[uc] < 0 || augment_row(match_col[uc], col_used, match_col, seen)) {
        match_col[uc] = r;
        return true;
      }
    }
    return false;
  }

  bool augment_col(int c, int first_row, std::vector<int>& match_row,
                   std::vector<char>& seen) const {
    for (int r : radj_[static_cast<std::size_t>(c)]) {
      const auto ur = static_cast<std::size_t>(r);
      if (r < first_row || seen[ur]) continue;
      seen[ur] = 1;
      if (match_row[ur] < 0 || augment_col(match_row[ur], first_row, match_row, seen)) {
        match_row[ur] = c;
        return true;
      }
    }
    return false;
  }

  int rows_;
  int cols_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::vector<int>> radj_;
};

}  // namespace

Assignment solve_assignment(const CostMatrix& costs) {
  check_costs(costs);
  const int m = static_cast<int>(costs.objects());
  const int n = static_cast<int>(costs.queries());
  if (m == 0) return Assignment{};

  // Shortest augmenting path Hungarian method with GT objects as rows.
  // Arrays are 1-based; column 0 is the virtual root.
  const double inf = std::numeric_limits<double>::infinity();
  auto a = [&](int gt, int query) { return costs.values(query - 1, gt - 1); };
  std::vector<double> u(static_cast<std::size_t>(m) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = a(i0, j) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(p[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  // Every optimal assignment uses only zero-reduced-cost edges and saturates
  // every query whose dual is negative; any such assignment is optimal. Pick
  // the lexicographically smallest one greedily, gt by gt.
  const double scale = std::max(1.0, costs.values.cwiseAbs().maxCoeff());
  const double eps = 1e-10 * scale;
  TightGraph tight(m, n);
  std::vector<char> required(static_cast<std::size_t>(n), 0);
  for (int j = 1; j <= n; ++j) {
    required[static_cast<std::size_t>(j) - 1] = v[static_cast<std::size_t>(j)] < -eps;
  }
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= n; ++j) {
      const double reduced = a(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
      if (reduced <= eps) tight.add(i - 1, j - 1);
    }
  }

  std::vector<int> query_of_gt(static_cast<std::size_t>(m), -1);
  std::vector<char> col_used(static_cast<std::size_t>(n), 0);
  for (int g = 0; g < m; ++g) {
    std::vector<int> options;
    for (int q : tight.row(g)) {
      if (!col_used[static_cast<std::size_t>(q)]) options.push_back(q);
    }
    int chosen = -1;
    for (std::size_t k = 0; k < options.size(); ++k) {
      const int q = options[k];
      if (k + 1 == options.size()) {
        chosen = q;
        break;
      }
      col_used[static_cast<std::size_t>(q)] = 1;
      const bool ok = tight.rows_saturable(g + 1, col_used) &&
                      tight.cols_saturable(g + 1, col_used, required);
      col_used[static_cast<std::size_t>(q)] = 0;
      if (ok) {
        chosen = q;
        break;
      }
    }
    if (chosen < 0) {
      // Only reachable if round-off broke the tight graph; fall back to the
      // Hungarian matching itself.
      for (int j = 1; j <= n; ++j) {
        if (p[static_cast<std::size_t>(j)] > 0) {
          query_of_gt[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
        }
      }
      return make_assignment(costs, query_of_gt);
    }
    query_of_gt[static_cast<std::size_t>(g)] = chosen;
    col_used[static_cast<std::size_t>(chosen)] = 1;
  }
  return make_assignment(costs, query_of_gt);
}

Assignment brute_force_assignment(const CostMatrix& costs) {
  if (costs.objects() > 8) {
    throw SizeLimitError(fmt::format("brute force supports at most 8 objects, got {}",
                                     costs.objects()));
  }
  if (costs.queries() > 12) {
    throw SizeLimitError(fmt::format("brute force supports at most 12 queries, got {}",
                                     costs.queries()));
  }
  check_costs(costs);
  const int m = static_cast<int>(costs.objects());
  const int n = static_cast<int>(costs.queries());

  std::vector<int> current(static_cast<std::size_t>(m), -1);
  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<char> used(static_cast<std::size_t>(n), 0);

  // Queries are tried in ascending order, so the first optimum found is the
  // lexicographically smallest.
  auto search = [&](auto&& self, int g, double partial) -> void {
    if (g == m) {
      if (partial < best_cost) {
        best_cost = partial;
        best = current;
      }
      return;
    }
    for (int q = 0; q < n; ++q) {
      if (used[static_cast<std::size_t>(q)]) continue;
      used[static_cast<std::size_t>(q)] = 1;
      current[static_cast<std::size_t>(g)] = q;
      self(self, g + 1, partial + costs.values(q, g));
      used[static_cast<std::size_t>(q)] = 0;
    }
  };
  search(search, 0, 0.0);
  return make_assignment(costs, best);
}

}  // namespace openeval
