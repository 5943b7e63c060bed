#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "openeval/types.hpp"

namespace openeval {

enum class BoxFormat { xywh, xyxy, cxcywh };

template <typename Scalar>
using BoxCoords = std::array<Scalar, 4>;

/// Converts between corner/size, two-corner and center/size layouts.
/// Throws ValidationError if the source box has non-positive extent.
template <typename Scalar>
BoxCoords<Scalar> convert_box(const BoxCoords<Scalar>& b, BoxFormat from, BoxFormat to) {
  Scalar x1, y1, w, h;
  switch (from) {
    case BoxFormat::xywh:
      if (!(b[2] > 0 && b[3] > 0)) throw ValidationError("xywh box needs w > 0 and h > 0");
      x1 = b[0], y1 = b[1], w = b[2], h = b[3];
      break;
    case BoxFormat::xyxy:
      if (!(b[2] > b[0] && b[3] > b[1])) throw ValidationError("xyxy box needs x2 > x1 and y2 > y1");
      x1 = b[0], y1 = b[1], w = b[2] - b[0], h = b[3] - b[1];
      break;
    case BoxFormat::cxcywh:
      if (!(b[2] > 0 && b[3] > 0)) throw ValidationError("cxcywh box needs w > 0 and h > 0");
      x1 = b[0] - b[2] / 2, y1 = b[1] - b[3] / 2, w = b[2], h = b[3];
      break;
  }
  if (from == to) return b;
  switch (to) {
    case BoxFormat::xywh: return {x1, y1, w, h};
    case BoxFormat::xyxy: return {x1, y1, x1 + w, y1 + h};
    case BoxFormat::cxcywh: return {x1 + w / 2, y1 + h / 2, w, h};
  }
  return b;
}

template <typename Scalar>
Scalar intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const Scalar ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  return (iw > 0 && ih > 0) ? iw * ih : Scalar(0);
}

/// Intersection over union. Exactly 0 for boxes that only touch.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  if (inter == 0) return Scalar(0);
  const Scalar uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

/// Generalized IoU: iou - (enclosing - union) / enclosing, in (-1, 1].
template <typename Scalar>
Scalar giou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  const Scalar ew = std::max(a.x2(), b.x2()) - std::min(a.x, b.x);
  const Scalar eh = std::max(a.y2(), b.y2()) - std::min(a.y, b.y);
  const Scalar enclosing = ew * eh;
  return inter / uni - (enclosing - uni) / enclosing;
}

/// rows = `a`, cols = `b`.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> iou_matrix(
    std::span<const Box<Scalar>> a, std::span<const Box<Scalar>> b) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(
      static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(a[i], b[j]);
    }
  }
  return m;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> giou_matrix(
    std::span<const Box<Scalar>> a, std::span<const Box<Scalar>> b) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(
      static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = giou(a[i], b[j]);
    }
  }
  return m;
}

/// Box as (cx, cy, w, h) divided by image width/height.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> normalized_cxcywh(const Box<Scalar>& b, Scalar width,
                                               Scalar height) {
  Eigen::Matrix<Scalar, 4, 1> v;
  v << (b.x + b.w / 2) / width, (b.y + b.h / 2) / height, b.w / width, b.h / height;
  return v;
}

/// Strict weak order used wherever detections are ranked: score descending,
/// then (image_id, x, y, w, h) ascending.
bool score_order(const Detection& a, const Detection& b);

/// Greedy class-agnostic NMS within each image. A detection is suppressed
/// when its IoU with an already kept detection of the same image exceeds
/// `iou_threshold`. Output is in `score_order`.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

}  // namespace openeval
