#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "openeval/errors.hpp"

namespace openeval {

/// Axis-aligned box in absolute pixels, stored as (x, y, w, h) with (x, y)
/// the top-left corner.
template <typename Scalar>
struct Box {
  Scalar x{0};
  Scalar y{0};
  Scalar w{1};
  Scalar h{1};

  Scalar x2() const { return x + w; }
  Scalar y2() const { return y + h; }
  Scalar area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w > 0 && h > 0;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

using BoundingBox = Box<double>;

/// Throws ValidationError when the box breaks the positivity invariant.
inline BoundingBox checked_box(double x, double y, double w, double h,
                               const std::string& where = {}) {
  BoundingBox b{x, y, w, h};
  if (!b.valid()) {
    throw ValidationError((where.empty() ? std::string("box") : where) +
                          ": box must have finite coordinates and w > 0, h > 0");
  }
  return b;
}

/// Image identifier as found in the input files: either an integer or a
/// string. Integers order before strings.
class ImageId {
 public:
  ImageId() = default;
  ImageId(std::int64_t v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  ImageId(std::string v) : value_(std::move(v)) {}  // NOLINT
  ImageId(const char* v) : value_(std::string(v)) {}  // NOLINT

  bool is_int() const { return std::holds_alternative<std::int64_t>(value_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(value_); }
  const std::string& as_string() const { return std::get<std::string>(value_); }
  std::string to_string() const {
    return is_int() ? std::to_string(as_int()) : as_string();
  }

  friend bool operator==(const ImageId&, const ImageId&) = default;
  friend std::strong_ordering operator<=>(const ImageId& a, const ImageId& b) {
    return a.value_ <=> b.value_;
  }

  std::size_t hash() const {
    return is_int() ? std::hash<std::int64_t>{}(as_int())
                    : std::hash<std::string>{}(as_string()) ^ 0x9e3779b97f4a7c15ULL;
  }

 private:
  std::variant<std::int64_t, std::string> value_{std::int64_t{0}};
};

struct ImageIdHash {
  std::size_t operator()(const ImageId& id) const { return id.hash(); }
};

enum class Frequency { rare, common, frequent };

struct Category {
  int id = 0;
  std::string name;
  Frequency frequency = Frequency::frequent;

  friend bool operator==(const Category&, const Category&) = default;
};

/// Closed label space used at evaluation time.
class Taxonomy {
 public:
  Taxonomy() = default;
  /// Validates ids (positive, unique) and names (nonempty, unique after
  /// normalization). Throws ValidationError.
  explicit Taxonomy(std::vector<Category> categories);

  const std::vector<Category>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }
  bool contains(int id) const { return index_.count(id) != 0; }
  /// Throws ReferenceError for unknown ids.
  const Category& at(int id) const;

  friend bool operator==(const Taxonomy& a, const Taxonomy& b) {
    return a.categories_ == b.categories_;
  }

 private:
  std::vector<Category> categories_;
  std::unordered_map<int, std::size_t> index_;
};

struct ImageInfo {
  ImageId id;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct GroundTruthAnnotation {
  ImageId image_id;
  BoundingBox box;
  int category_id = 0;
  std::optional<std::string> reference_label;

  friend bool operator==(const GroundTruthAnnotation&,
                         const GroundTruthAnnotation&) = default;
};

struct GroundTruth {
  std::vector<ImageInfo> images;
  std::vector<GroundTruthAnnotation> annotations;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// One beam output: a free-form label and its sequence log-probability.
struct LabelCandidate {
  std::string text;
  double logprob = 0.0;

  friend bool operator==(const LabelCandidate&, const LabelCandidate&) = default;
};

enum class DetectionSource { initial, supplemental };

struct Detection {
  ImageId image_id;
  BoundingBox box;
  double score = 0.0;
  std::vector<LabelCandidate> candidates;
  DetectionSource source = DetectionSource::supplemental;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Precomputed text embeddings keyed by normalized text. Row i of `vectors()`
/// belongs to `texts()[i]`.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Texts are normalized here. Throws ValidationError on dimension mismatch,
  /// zero-norm vectors and duplicate normalized texts.
  EmbeddingTable(const std::vector<std::string>& texts, Eigen::MatrixXd vectors);

  Eigen::Index dim() const { return vectors_.cols(); }
  std::size_t size() const { return texts_.size(); }
  const std::vector<std::string>& texts() const { return texts_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  /// Row index for an already-normalized text, or nullopt.
  std::optional<Eigen::Index> find(const std::string& normalized) const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.texts_ == b.texts_ && a.vectors_.rows() == b.vectors_.rows() &&
           a.vectors_.cols() == b.vectors_.cols() && a.vectors_ == b.vectors_;
  }

 private:
  std::vector<std::string> texts_;
  Eigen::MatrixXd vectors_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

enum class ScorePolicy { objectness, objectness_times_candidate_prob };

/// What label mapping does with a candidate whose text has no embedding.
enum class MissingEmbeddingPolicy { error, skip, zero_vector_reject };

struct EvalConfig {
  std::vector<double> iou_grid{0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<double> meteor_grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::vector<double> ap_iou_grid{0.50, 0.55, 0.60, 0.65, 0.70,
                                  0.75, 0.80, 0.85, 0.90, 0.95};
  int per_class_cap = 10000;
  // 0 selects all-point interpolation.
  int interpolation_points = 101;
  ScorePolicy score_policy = ScorePolicy::objectness;
  double min_similarity = 0.0;
  MissingEmbeddingPolicy on_missing_embedding = MissingEmbeddingPolicy::error;

  /// Throws ValidationError.
  void validate() const;
};

}  // namespace openeval
