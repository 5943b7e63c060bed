#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "openeval/label_mapping.hpp"
#include "openeval/meteor.hpp"
#include "openeval/types.hpp"

namespace openeval {

/// Extra test a (detection, gt) pair must pass to match, by index into the
/// spans given to match_greedy.
using MatchPredicate = std::function<bool(std::size_t det, std::size_t gt)>;

/// Greedy matching within one image. Detections must be in non-increasing
/// score order (ContractError otherwise). Each detection takes the unmatched
/// GT with the highest IoU >= threshold that passes `predicate`; ties go to
/// the lower GT index. Returns one TP flag per detection.
std::vector<bool> match_greedy(std::span<const BoundingBox> det_boxes,
                               std::span<const double> det_scores,
                               std::span<const BoundingBox> gt_boxes, double iou_threshold,
                               const MatchPredicate& predicate = {});

/// Same, from a precomputed det x gt IoU matrix.
std::vector<bool> match_greedy(const Eigen::MatrixXd& ious, std::span<const double> det_scores,
                               double iou_threshold, const MatchPredicate& predicate = {});

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Cumulative precision/recall along score-ordered TP flags.
std::vector<PRPoint> pr_curve(const std::vector<bool>& tp, std::size_t num_gt);

/// Interpolated AP: mean over `points` evenly spaced recall levels in [0, 1]
/// of the best precision at recall >= level. points == 0 gives the all-point
/// area under the precision envelope. Returns 0 when num_gt == 0.
double average_precision(const std::vector<bool>& tp, std::size_t num_gt,
                         int points = 101);

struct EvalReport {
  // Taxonomy protocol. Categories without GT map to nullopt.
  std::map<int, std::optional<double>> ap_per_category;
  std::optional<double> ap_rare, ap_common, ap_frequent, ap_all;
  // Dense-caption protocol: rows follow iou_grid, columns meteor_grid.
  std::vector<double> iou_grid, meteor_grid;
  Eigen::MatrixXd grid_ap;
  std::optional<double> map_densecap;
};

/// Fixed AP: per category, detections are pooled over the whole dataset,
/// the top `per_class_cap` by score kept, and AP averaged over ap_iou_grid.
/// Categories without GT are left out of every mean; an empty bucket is
/// reported as nullopt.
EvalReport evaluate_fixed_ap(const std::vector<MappedDetection>& mapped,
                             const std::vector<GroundTruthAnnotation>& gts,
                             const Taxonomy& taxonomy, const EvalConfig& config,
                             int threads = 1);

/// Category-free AP over the IoU x METEOR grid. Each detection's caption is
/// its top candidate; a match additionally needs METEOR(caption, reference)
/// >= the cell's METEOR threshold. Throws ValidationError naming the first
/// GT without a reference label.
EvalReport evaluate_densecap(const std::vector<Detection>& dets,
                             const std::vector<GroundTruthAnnotation>& gts,
                             const EvalConfig& config, const MeteorParams& params = {},
                             int threads = 1);

}  // namespace openeval
