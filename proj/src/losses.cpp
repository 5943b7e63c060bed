#include "openeval/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "openeval/geometry.hpp"

namespace openeval {

namespace {

constexpr double kProbEps = 1e-7;
constexpr double kLmEps = 1e-12;

// -ln sigmoid(s) = softplus(-s)
double neg_log_sigmoid(double s) {
  return s >= 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
}

}  // namespace

DetectionLosses detection_losses(const Assignment& assignment,
                                 std::span<const BoundingBox> pred_boxes,
                                 std::span<const double> pred_fg_probs,
                                 std::span<const BoundingBox> gt_boxes, ImageSize image_size) {
  if (pred_boxes.size() != pred_fg_probs.size()) {
    throw ValidationError("pred_boxes and pred_fg_probs must have equal length");
  }
  if (!(image_size.width > 0 && image_size.height > 0)) {
    throw ValidationError("image size must be positive");
  }
  const int n = static_cast<int>(pred_boxes.size());
  for (const auto& [q, g] : assignment.pairs) {
    if (q < 0 || q >= n || g < 0 || g >= static_cast<int>(gt_boxes.size())) {
      throw ValidationError(fmt::format("assignment pair ({}, {}) out of range", q, g));
    }
  }
  const std::vector<int> matched = assignment.gt_for_query(n);

  DetectionLosses out;
  if (n > 0) {
    double bce = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = std::clamp(pred_fg_probs[static_cast<std::size_t>(i)], kProbEps, 1.0 - kProbEps);
      bce += matched[static_cast<std::size_t>(i)] >= 0 ? -std::log(p) : -std::log1p(-p);
    }
    out.bce = bce / n;
  }
  if (!assignment.pairs.empty()) {
    double l1 = 0.0, g_loss = 0.0;
    for (const auto& [q, g] : assignment.pairs) {
      const BoundingBox& b = pred_boxes[static_cast<std::size_t>(q)];
      const BoundingBox& t = gt_boxes[static_cast<std::size_t>(g)];
      l1 += (normalized_cxcywh(b, image_size.width, image_size.height) -
             normalized_cxcywh(t, image_size.width, image_size.height))
                .cwiseAbs()
                .sum();
      g_loss += 1.0 - giou(b, t);
    }
    const auto k = static_cast<double>(assignment.pairs.size());
    out.l1 = l1 / k;
    out.giou = g_loss / k;
  }
  return out;
}

void AlignmentScores::validate() const {
  if (scores.rows() < 1) throw ValidationError("alignment scores need at least one region");
  if (static_cast<Eigen::Index>(positives.size()) != scores.rows()) {
    throw ValidationError("alignment: one positive word index per region required");
  }
  if (!scores.allFinite()) throw ValidationError("alignment scores must be finite");
  for (std::size_t i = 0; i < positives.size(); ++i) {
    if (positives[i] < 0 || positives[i] >= scores.cols()) {
      throw ValidationError(fmt::format("alignment: positive index {} of region {} out of range",
                                        positives[i], i));
    }
  }
}

double align_loss(const AlignmentScores& s) {
  s.validate();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < s.scores.rows(); ++i) {
    const int k = s.positives[static_cast<std::size_t>(i)];
    double region = neg_log_sigmoid(s.scores(i, k));
    for (Eigen::Index t = 0; t < s.scores.cols(); ++t) {
      // -ln(1 - sigmoid(s)) = -ln sigmoid(-s)
      if (t != k) region += neg_log_sigmoid(-s.scores(i, t));
    }
    loss += region;
  }
  return loss;
}

void TokenDistributionSequence::validate() const {
  if (static_cast<Eigen::Index>(target.size()) != steps.rows()) {
    throw ValidationError("token sequence: one target per step required");
  }
  for (Eigen::Index t = 0; t < steps.rows(); ++t) {
    if (!steps.row(t).allFinite() || (steps.row(t).array() < 0.0).any()) {
      throw ValidationError(fmt::format("token sequence: step {} has invalid probabilities", t));
    }
    if (std::abs(steps.row(t).sum() - 1.0) > 1e-9) {
      throw ValidationError(fmt::format("token sequence: step {} does not sum to 1", t));
    }
    const int w = target[static_cast<std::size_t>(t)];
    if (w < 0 || w >= steps.cols()) {
      throw ValidationError(fmt::format("token sequence: target {} at step {} out of range", w, t));
    }
  }
}

double lm_loss(std::span<const TokenDistributionSequence> sequences) {
  double loss = 0.0;
  for (const auto& seq : sequences) {
    seq.validate();
    for (Eigen::Index t = 0; t < seq.steps.rows(); ++t) {
      const double p = seq.steps(t, seq.target[static_cast<std::size_t>(t)]);
      loss += -std::log(std::max(p, kLmEps));
    }
  }
  return loss;
}

LossBreakdown total_loss(const std::array<double, kNumLossTerms>& components,
                         const std::array<double, kNumLossTerms>& weights) {
  LossBreakdown out;
  out.components = components;
  out.weights = weights;
  for (int k = 0; k < kNumLossTerms; ++k) {
    if (!std::isfinite(components[k]) || !std::isfinite(weights[k])) {
      throw ValidationError("loss components and weights must be finite");
    }
    if (weights[k] < 0) throw ValidationError(fmt::format("loss weight {} is negative", k));
    out.total += weights[k] * components[k];
  }
  return out;
}

}  // namespace openeval
