#include "openeval/ap.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "openeval/geometry.hpp"
#include "openeval/parallel.hpp"
#include "openeval/text.hpp"

namespace openeval {

namespace {

void check_sorted(std::span<const double> scores) {
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (!(scores[i - 1] >= scores[i])) {
      throw ContractError(fmt::format(
          "match_greedy: detections must be sorted by score descending (index {})", i));
    }
  }
}

// Detections of one image in rank order, with their global rank positions.
struct ImageSlice {
  std::vector<std::size_t> ranks;
  std::vector<BoundingBox> det_boxes;
  std::vector<double> det_scores;
  std::vector<std::size_t> gts;  // indices into the caller's GT list
  std::vector<BoundingBox> gt_boxes;
  Eigen::MatrixXd ious;
};

template <typename T>
double mean_of(const std::vector<T>& xs) {
  double s = 0.0;
  for (const T& x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::vector<bool> match_greedy(const Eigen::MatrixXd& ious, std::span<const double> det_scores,
                               double iou_threshold, const MatchPredicate& predicate) {
  if (static_cast<Eigen::Index>(det_scores.size()) != ious.rows()) {
    throw ValidationError("match_greedy: score count does not match IoU rows");
  }
  check_sorted(det_scores);
  std::vector<bool> tp(det_scores.size(), false);
  std::vector<char> gt_used(static_cast<std::size_t>(ious.cols()), 0);
  for (Eigen::Index i = 0; i < ious.rows(); ++i) {
    Eigen::Index best = -1;
    double best_iou = -1.0;
    for (Eigen::Index j = 0; j < ious.cols(); ++j) {
      if (gt_used[static_cast<std::size_t>(j)]) continue;
      const double v = ious(i, j);
      if (v < iou_threshold || v <= best_iou) continue;
      if (predicate && !predicate(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        continue;
      }
      best = j;
      best_iou = v;
    }
    if (best >= 0) {
      gt_used[static_cast<std::size_t>(best)] = 1;
      tp[static_cast<std::size_t>(i)] = true;
    }
  }
  return tp;
}

std::vector<bool> match_greedy(std::span<const BoundingBox> det_boxes,
                               std::span<const double> det_scores,
                               std::span<const BoundingBox> gt_boxes, double iou_threshold,
                               const MatchPredicate& predicate) {
  if (det_boxes.size() != det_scores.size()) {
    throw ValidationError("match_greedy: one score per detection box required");
  }
  return match_greedy(iou_matrix(det_boxes, gt_boxes), det_scores, iou_threshold, predicate);
}

std::vector<PRPoint> pr_curve(const std::vector<bool>& tp, std::size_t num_gt) {
  std::vector<PRPoint> curve;
  curve.reserve(tp.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    if (tp[k]) ++hits;
    const double recall = num_gt ? static_cast<double>(hits) / static_cast<double>(num_gt) : 0.0;
    curve.push_back({recall, static_cast<double>(hits) / static_cast<double>(k + 1)});
  }
  return curve;
}

double average_precision(const std::vector<bool>& tp, std::size_t num_gt, int points) {
  if (num_gt == 0 || tp.empty()) return 0.0;
  std::vector<PRPoint> curve = pr_curve(tp, num_gt);
  for (std::size_t k = curve.size() - 1; k-- > 0;) {
    curve[k].precision = std::max(curve[k].precision, curve[k + 1].precision);
  }
  if (points == 0) {
    double ap = 0.0, prev_recall = 0.0;
    for (const PRPoint& p : curve) {
      ap += (p.recall - prev_recall) * p.precision;
      prev_recall = p.recall;
    }
    return ap;
  }
  double sum = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < points; ++i) {
    const double level = static_cast<double>(i) / static_cast<double>(points - 1);
    while (k < curve.size() && curve[k].recall < level) ++k;
    if (k == curve.size()) break;
    sum += curve[k].precision;
  }
  return sum / static_cast<double>(points);
}

namespace {

// Groups rank-ordered detections by image and attaches that image's GT.
std::vector<ImageSlice> slice_by_image(
    const std::vector<std::tuple<ImageId, BoundingBox, double>>& ranked,
    const std::unordered_map<ImageId, std::vector<std::size_t>, ImageIdHash>& gt_by_image,
    const std::vector<GroundTruthAnnotation>& gts) {
  std::unordered_map<ImageId, std::size_t, ImageIdHash> slot;
  std::vector<ImageSlice> slices;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& [image, box, score] = ranked[r];
    auto [it, inserted] = slot.emplace(image, slices.size());
    if (inserted) {
      slices.emplace_back();
      auto g = gt_by_image.find(image);
      if (g != gt_by_image.end()) {
        slices.back().gts = g->second;
        for (std::size_t gi : g->second) slices.back().gt_boxes.push_back(gts[gi].box);
      }
    }
    ImageSlice& s = slices[it->second];
    s.ranks.push_back(r);
    s.det_boxes.push_back(box);
    s.det_scores.push_back(score);
  }
  for (ImageSlice& s : slices) {
    s.ious = iou_matrix(std::span<const BoundingBox>(s.det_boxes),
                        std::span<const BoundingBox>(s.gt_boxes));
  }
  return slices;
}

std::optional<double> bucket_mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return mean_of(xs);
}

}  // namespace

EvalReport evaluate_fixed_ap(const std::vector<MappedDetection>& mapped,
                             const std::vector<GroundTruthAnnotation>& gts,
                             const Taxonomy& taxonomy, const EvalConfig& config, int threads) {
  config.validate();
  std::vector<int> ids;
  for (const Category& c : taxonomy.categories()) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  std::unordered_map<int, std::size_t> cat_slot;
  for (std::size_t k = 0; k < ids.size(); ++k) cat_slot.emplace(ids[k], k);

  std::vector<std::unordered_map<ImageId, std::vector<std::size_t>, ImageIdHash>> gt_index(ids.size());
  std::vector<std::size_t> gt_count(ids.size(), 0);
  for (std::size_t i = 0; i < gts.size(); ++i) {
    auto it = cat_slot.find(gts[i].category_id);
    if (it == cat_slot.end()) {
      throw ReferenceError(fmt::format("annotation #{}: category_id {} not in taxonomy", i,
                                       gts[i].category_id));
    }
    gt_index[it->second][gts[i].image_id].push_back(i);
    ++gt_count[it->second];
  }
  std::vector<std::vector<std::size_t>> det_index(ids.size());
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    auto it = cat_slot.find(mapped[i].category_id);
    if (it == cat_slot.end()) {
      throw ReferenceError(fmt::format("mapped detection #{}: category_id {} not in taxonomy", i,
                                       mapped[i].category_id));
    }
    det_index[it->second].push_back(i);
  }

  std::vector<std::optional<double>> ap(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t k) {
    if (gt_count[k] == 0) return;
    std::vector<std::size_t>& order = det_index[k];
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const MappedDetection& x = mapped[a];
      const MappedDetection& y = mapped[b];
      if (x.score != y.score) return x.score > y.score;
      const auto kx = std::tie(x.image_id, x.box.x, x.box.y, x.box.w, x.box.h);
      const auto ky = std::tie(y.image_id, y.box.x, y.box.y, y.box.w, y.box.h);
      if (kx != ky) return kx < ky;
      return a < b;
    });
    if (order.size() > static_cast<std::size_t>(config.per_class_cap)) {
      order.resize(static_cast<std::size_t>(config.per_class_cap));
    }
    std::vector<std::tuple<ImageId, BoundingBox, double>> ranked;
    ranked.reserve(order.size());
    for (std::size_t i : order) ranked.emplace_back(mapped[i].image_id, mapped[i].box, mapped[i].score);
    const std::vector<ImageSlice> slices = slice_by_image(ranked, gt_index[k], gts);

    double sum = 0.0;
    std::vector<bool> tp(ranked.size());
    for (double t : config.ap_iou_grid) {
      for (const ImageSlice& s : slices) {
        const std::vector<bool> flags = match_greedy(s.ious, s.det_scores, t);
        for (std::size_t r = 0; r < flags.size(); ++r) tp[s.ranks[r]] = flags[r];
      }
      sum += average_precision(tp, gt_count[k], config.interpolation_points);
    }
    ap[k] = sum / static_cast<double>(config.ap_iou_grid.size());
  });

  EvalReport report;
  std::vector<double> all, rare, common, frequent;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    report.ap_per_category[ids[k]] = ap[k];
    if (!ap[k]) continue;
    all.push_back(*ap[k]);
    switch (taxonomy.at(ids[k]).frequency) {
      case Frequency::rare: rare.push_back(*ap[k]); break;
      case Frequency::common: common.push_back(*ap[k]); break;
      case Frequency::frequent: frequent.push_back(*ap[k]); break;
    }
  }
  report.ap_all = bucket_mean(all);
  report.ap_rare = bucket_mean(rare);
  report.ap_common = bucket_mean(common);
  report.ap_frequent = bucket_mean(frequent);
  return report;
}

EvalReport evaluate_densecap(const std::vector<Detection>& dets,
                             const std::vector<GroundTruthAnnotation>& gts,
                             const EvalConfig& config, const MeteorParams& params, int threads) {
  config.validate();
  params.validate();
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!gts[i].reference_label || normalize_text(*gts[i].reference_label).empty()) {
      throw ValidationError(fmt::format("annotation #{} (image {}) has no reference label", i,
                                        gts[i].image_id.to_string()));
    }
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].candidates.empty()) {
      throw ValidationError(fmt::format("detection #{} has no label candidates", i));
    }
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score_order(dets[a], dets[b]);
  });
  std::vector<std::tuple<ImageId, BoundingBox, double>> ranked;
  ranked.reserve(order.size());
  for (std::size_t i : order) ranked.emplace_back(dets[i].image_id, dets[i].box, dets[i].score);

  std::unordered_map<ImageId, std::vector<std::size_t>, ImageIdHash> gt_by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) gt_by_image[gts[i].image_id].push_back(i);
  const std::vector<ImageSlice> slices = slice_by_image(ranked, gt_by_image, gts);

  // METEOR only matters where the box can match at the loosest IoU level.
  const double loosest = config.iou_grid.front();
  std::vector<Eigen::MatrixXd> meteors(slices.size());
  parallel_for(slices.size(), threads, [&](std::size_t si) {
    const ImageSlice& s = slices[si];
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(s.ious.rows(), s.ious.cols(), -1.0);
    for (Eigen::Index d = 0; d < m.rows(); ++d) {
      const Detection& det = dets[order[s.ranks[static_cast<std::size_t>(d)]]];
      for (Eigen::Index g = 0; g < m.cols(); ++g) {
        if (s.ious(d, g) < loosest) continue;
        m(d, g) = meteor(det.candidates.front().text,
                         *gts[s.gts[static_cast<std::size_t>(g)]].reference_label, params);
      }
    }
    meteors[si] = std::move(m);
  });

  const auto rows = static_cast<Eigen::Index>(config.iou_grid.size());
  const auto cols = static_cast<Eigen::Index>(config.meteor_grid.size());
  EvalReport report;
  report.iou_grid = config.iou_grid;
  report.meteor_grid = config.meteor_grid;
  report.grid_ap = Eigen::MatrixXd::Zero(rows, cols);
  parallel_for(static_cast<std::size_t>(rows * cols), threads, [&](std::size_t cell) {
    const auto r = static_cast<Eigen::Index>(cell) / cols;
    const auto c = static_cast<Eigen::Index>(cell) % cols;
    const double t_iou = config.iou_grid[static_cast<std::size_t>(r)];
    const double t_m = config.meteor_grid[static_cast<std::size_t>(c)];
    std::vector<bool> tp(ranked.size());
    for (std::size_t si = 0; si < slices.size(); ++si) {
      const Eigen::MatrixXd& m = meteors[si];
      const std::vector<bool> flags = match_greedy(
          slices[si].ious, slices[si].det_scores, t_iou,
          [&](std::size_t d, std::size_t g) {
            return m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(g)) >= t_m;
          });
      for (std::size_t k = 0; k < flags.size(); ++k) tp[slices[si].ranks[k]] = flags[k];
    }
    report.grid_ap(r, c) = average_precision(tp, gts.size(), config.interpolation_points);
  });
  if (!gts.empty()) report.map_densecap = report.grid_ap.mean();
  return report;
}

}  // namespace openeval
