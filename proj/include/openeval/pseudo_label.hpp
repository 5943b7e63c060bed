#pragma once

#include <vector>

#include "openeval/types.hpp"

namespace openeval {

struct MergeOptions {
  double conf_threshold = 0.5;  // supplemental kept only if score > this
  double nms_threshold = 0.5;
};

/// Single-pass pseudo-label enrichment. Initial (caption-grounded) labels are
/// kept verbatim and in order. A supplemental detection survives if its score
/// exceeds conf_threshold, it overlaps no initial detection of the same image
/// by more than nms_threshold IoU, and it survives class-agnostic NMS among the
/// other supplemental detections. Survivors are appended in score order,
/// tagged `supplemental`, with their beam candidates intact.
std::vector<Detection> merge_labels(const std::vector<Detection>& initial,
                                    const std::vector<Detection>& supplemental,
                                    const MergeOptions& options = {});

}  // namespace openeval
