#include "openeval/geometry.hpp"

#include <tuple>
#include <unordered_map>

namespace openeval {

bool score_order(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.image_id, a.box.x, a.box.y, a.box.w, a.box.h) <
         std::tie(b.image_id, b.box.x, b.box.y, b.box.w, b.box.h);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("nms threshold must lie in [0,1]");
  }
  std::stable_sort(dets.begin(), dets.end(), score_order);

  std::unordered_map<ImageId, std::vector<BoundingBox>, ImageIdHash> kept_boxes;
  std::vector<Detection> kept;
  for (Detection& d : dets) {
    auto& boxes = kept_boxes[d.image_id];
    const bool suppressed = std::any_of(boxes.begin(), boxes.end(), [&](const BoundingBox& k) {
      return iou(k, d.box) > iou_threshold;
    });
    if (suppressed) continue;
    boxes.push_back(d.box);
    kept.push_back(std::move(d));
  }
  return kept;
}

}  // namespace openeval
