#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "openeval/assignment.hpp"
#include "openeval/errors.hpp"

namespace openeval {
namespace {

CostMatrix costs(std::initializer_list<std::initializer_list<double>> rows) {
  CostMatrix c;
  c.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) c.values(i, j++) = v;
    ++i;
  }
  return c;
}

using Pairs = std::vector<std::pair<int, int>>;

// Independent oracle: enumerate ordered selections of M distinct queries via
// next_permutation over a query index vector, minimizing cost and then the
// query list read in gt order.
std::pair<double, std::vector<int>> enumerate_optimum(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows()), m = static_cast<int>(c.cols());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_queries;
  do {
    double total = 0;
    for (int j = 0; j < m; ++j) total += c(perm[j], j);
    std::vector<int> q(perm.begin(), perm.begin() + m);
    if (total < best || (total == best && q < best_queries)) {
      best = total;
      best_queries = q;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_queries};
}

std::vector<int> queries_of(const Assignment& a) {
  std::vector<int> q;
  for (const auto& [query, gt] : a.pairs) q.push_back(query);
  return q;
}

TEST(BuildCostMatrix, PerfectMatchLimit) {
  const std::vector<BoundingBox> boxes{{3, 4, 10, 20}};
  const double eps = 1e-6;
  const std::vector<double> p{1 - eps};
  const CostMatrix c = build_cost_matrix(boxes, p, boxes, {1, 5, 2}, {100, 100});
  EXPECT_NEAR(c.values(0, 0), -std::log(1 - eps), 1e-12);
}

TEST(BuildCostMatrix, HandComputedEntry) {
  const std::vector<BoundingBox> pred{{0, 0, 10, 10}}, gt{{20, 0, 10, 10}};
  const std::vector<double> p{0.5};
  const CostMatrix c = build_cost_matrix(pred, p, gt, {1, 5, 2}, {30, 10});
  const double expected = std::log(2.0) + 5.0 * (20.0 / 30.0) + 2.0 * (1.0 + 1.0 / 3.0);
  EXPECT_NEAR(c.values(0, 0), expected, 1e-9);
  EXPECT_NEAR(c.values(0, 0), 6.6931, 1e-4);
}

TEST(BuildCostMatrix, DomainAndValidationErrors) {
  const std::vector<BoundingBox> b{{0, 0, 1, 1}};
  EXPECT_THROW(build_cost_matrix(b, std::vector<double>{0.0}, b, {}, {10, 10}), DomainError);
  EXPECT_THROW(build_cost_matrix(b, std::vector<double>{1.0}, b, {}, {10, 10}), DomainError);
  EXPECT_THROW(build_cost_matrix(b, std::vector<double>{0.5, 0.5}, b, {}, {10, 10}),
               ValidationError);
  EXPECT_THROW(build_cost_matrix(b, std::vector<double>{0.5}, b, {}, {0, 10}), ValidationError);
}

TEST(SolveAssignment, Examples) {
  const Assignment a = solve_assignment(costs({{1, 2}, {2, 1}}));
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.total_cost, 2.0);

  const Assignment z = solve_assignment(CostMatrix{Eigen::MatrixXd::Zero(3, 3)});
  EXPECT_EQ(z.pairs, (Pairs{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_EQ(z.total_cost, 0.0);

  const Assignment col = solve_assignment(costs({{5}, {1}, {3}}));
  EXPECT_EQ(col.pairs, (Pairs{{1, 0}}));
  EXPECT_EQ(col.total_cost, 1.0);
}

TEST(SolveAssignment, InfeasibleWhenMoreGtThanQueries) {
  EXPECT_THROW(solve_assignment(costs({{1, 2}})), InfeasibleError);
}

TEST(SolveAssignment, EmptyGt) {
  const Assignment a = solve_assignment(CostMatrix{Eigen::MatrixXd(3, 0)});
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.total_cost, 0.0);
  EXPECT_EQ(a.gt_for_query(3), (std::vector<int>{-1, -1, -1}));
}

TEST(BruteForce, Examples) {
  const Assignment one = brute_force_assignment(costs({{7}}));
  EXPECT_EQ(one.total_cost, 7.0);
  const CostMatrix c = costs({{4, 9, 1}, {3, 3, 8}, {7, 2, 6}, {5, 5, 5}});
  const Assignment b = brute_force_assignment(c);
  const Assignment h = solve_assignment(c);
  EXPECT_EQ(b.pairs, h.pairs);
  EXPECT_EQ(b.total_cost, h.total_cost);
  EXPECT_THROW(brute_force_assignment(CostMatrix{Eigen::MatrixXd::Zero(9, 9)}), SizeLimitError);
}

TEST(SolveAssignment, TieBreakPrefersSmallerQueriesInGtOrder) {
  // Both (0->gt0, 1->gt1) and (1->gt0, 0->gt1) cost 2; the first reads [0,1].
  const Assignment a = solve_assignment(costs({{1, 1}, {1, 1}}));
  EXPECT_EQ(queries_of(a), (std::vector<int>{0, 1}));
  // Unused queries with equal cost: the smallest index is taken.
  const Assignment b = solve_assignment(costs({{3}, {2}, {2}, {2}}));
  EXPECT_EQ(queries_of(b), (std::vector<int>{1}));
}

TEST(SolveAssignment, MatchesIndependentEnumerationWithTieBreak) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 6), val(0, 3);  // tiny range -> many ties
  for (int trial = 0; trial < 400; ++trial) {
    const int m = dim(rng);
    const int n = std::max(m, dim(rng));
    CostMatrix c{Eigen::MatrixXd(n, m)};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c.values(i, j) = val(rng);
    const auto [best, best_queries] = enumerate_optimum(c.values);
    const Assignment h = solve_assignment(c);
    ASSERT_EQ(h.total_cost, best);
    ASSERT_EQ(queries_of(h), best_queries) << c.values;
    ASSERT_EQ(queries_of(brute_force_assignment(c)), best_queries);
  }
}

TEST(SolveAssignment, OracleEquivalenceRealCosts) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> val(-5, 50);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = dim(rng);
    const int n = std::max(m, dim(rng));
    CostMatrix c{Eigen::MatrixXd(n, m)};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c.values(i, j) = val(rng);
    ASSERT_NEAR(solve_assignment(c).total_cost, brute_force_assignment(c).total_cost, 1e-9);
  }
}

TEST(SolveAssignment, AssignmentStructure) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(0, 1);
  CostMatrix c{Eigen::MatrixXd(40, 25)};
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 25; ++j) c.values(i, j) = val(rng);
  const Assignment a = solve_assignment(c);
  ASSERT_EQ(a.pairs.size(), 25u);
  std::vector<int> seen(40, 0);
  double sum = 0;
  for (std::size_t k = 0; k < a.pairs.size(); ++k) {
    EXPECT_EQ(a.pairs[k].second, static_cast<int>(k));
    EXPECT_EQ(seen[a.pairs[k].first]++, 0);
    sum += c.values(a.pairs[k].first, a.pairs[k].second);
  }
  EXPECT_EQ(a.total_cost, sum);
}

TEST(SolveAssignmentProperties, RowShiftKeepsPairSet) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> dim(1, 7), val(0, 100);
  std::uniform_int_distribution<int> shift(-20, 20);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = dim(rng);
    const int n = m;  // square
    CostMatrix c{Eigen::MatrixXd(n, m)};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c.values(i, j) = val(rng);
    CostMatrix shifted = c;
    const int row = std::uniform_int_distribution<int>(0, n - 1)(rng);
    shifted.values.row(row).array() += static_cast<double>(shift(rng));
    EXPECT_EQ(solve_assignment(c).pairs, solve_assignment(shifted).pairs);
  }
}

TEST(SolveAssignmentProperties, ColumnPermutationEquivariance) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> val(0, 100);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = dim(rng);
    const int n = std::max(m, dim(rng));
    CostMatrix c{Eigen::MatrixXd(n, m)};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c.values(i, j) = val(rng);
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    CostMatrix p{Eigen::MatrixXd(n, m)};
    for (int j = 0; j < m; ++j) p.values.col(j) = c.values.col(perm[j]);
    const auto base = solve_assignment(c).gt_for_query(n);
    const auto permuted = solve_assignment(p).gt_for_query(n);
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(base[i], permuted[i] < 0 ? -1 : perm[permuted[i]]);
    }
  }
}

}  // namespace
}  // namespace openeval
