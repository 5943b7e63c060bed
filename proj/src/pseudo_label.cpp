#include "openeval/pseudo_label.hpp"

#include <unordered_map>

#include "openeval/geometry.hpp"

namespace openeval {

std::vector<Detection> merge_labels(const std::vector<Detection>& initial,
                                    const std::vector<Detection>& supplemental,
                                    const MergeOptions& options) {
  if (!(options.conf_threshold >= 0.0 && options.conf_threshold <= 1.0) ||
      !(options.nms_threshold >= 0.0 && options.nms_threshold <= 1.0)) {
    throw ValidationError("merge thresholds must lie in [0,1]");
  }

  std::unordered_map<ImageId, std::vector<BoundingBox>, ImageIdHash> initial_boxes;
  for (const Detection& d : initial) initial_boxes[d.image_id].push_back(d.box);

  std::vector<Detection> candidates;
  for (const Detection& d : supplemental) {
    if (!(d.score > options.conf_threshold)) continue;
    auto it = initial_boxes.find(d.image_id);
    if (it != initial_boxes.end() &&
        std::any_of(it->second.begin(), it->second.end(), [&](const BoundingBox& b) {
          return iou(b, d.box) > options.nms_threshold;
        })) {
      continue;
    }
    candidates.push_back(d);
  }

  std::vector<Detection> out = initial;
  for (Detection& d : nms(std::move(candidates), options.nms_threshold)) {
    d.source = DetectionSource::supplemental;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace openeval
