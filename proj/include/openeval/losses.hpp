#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "openeval/assignment.hpp"
#include "openeval/types.hpp"

namespace openeval {

// Reference (forward-only) versions of the training losses of a
// class-agnostic detector with a captioning head. Reductions are fixed:
// BCE is averaged over all queries, L1 and gIoU over matched pairs, the
// language-modelling and region-word alignment losses are summed.

struct DetectionLosses {
  double bce = 0.0;
  double l1 = 0.0;
  double giou = 0.0;
};

/// Probabilities are clamped to [1e-7, 1 - 1e-7].
DetectionLosses detection_losses(const Assignment& assignment,
                                 std::span<const BoundingBox> pred_boxes,
                                 std::span<const double> pred_fg_probs,
                                 std::span<const BoundingBox> gt_boxes, ImageSize image_size);

/// Region-vs-word alignment scores for one decoder layer.
struct AlignmentScores {
  Eigen::MatrixXd scores;        // regions x words
  std::vector<int> positives;    // word index paired with each region

  void validate() const;
};

/// sum_i -[ln sig(s_i,k(i)) + sum_{t != k(i)} ln(1 - sig(s_it))], evaluated
/// with a stable log-sigmoid so saturated scores stay finite and accurate.
double align_loss(const AlignmentScores& scores);

/// Per-step next-token distributions (steps x vocab) and the target tokens.
struct TokenDistributionSequence {
  Eigen::MatrixXd steps;
  std::vector<int> target;

  void validate() const;
};

/// sum over sequences and steps of -ln P(target). Zero probabilities are
/// clamped to 1e-12.
double lm_loss(std::span<const TokenDistributionSequence> sequences);

enum LossTerm { kBce = 0, kL1, kGiou, kLm, kAlign, kNumLossTerms };

struct LossBreakdown {
  std::array<double, kNumLossTerms> components{};
  std::array<double, kNumLossTerms> weights{1.0, 1.0, 1.0, 1.0, 1.0};
  double total = 0.0;
};

/// total = sum_k w_k c_k, accumulated in term order. Throws ValidationError
/// for negative weights or non-finite inputs.
LossBreakdown total_loss(const std::array<double, kNumLossTerms>& components,
                         const std::array<double, kNumLossTerms>& weights = {1.0, 1.0, 1.0,
                                                                              1.0, 1.0});

}  // namespace openeval
