#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "openeval/types.hpp"

namespace openeval {

/// u.v / (|u| |v|), clamped to [-1, 1]. Throws DomainError on a zero-norm
/// input and ValidationError on a dimension mismatch.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size()) throw ValidationError("cosine_similarity: dimension mismatch");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) {
    throw DomainError("cosine_similarity: zero-norm vector");
  }
  const Scalar c = u.dot(v) / (nu * nv);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// A detection whose free-form label was mapped onto a taxonomy category.
struct MappedDetection {
  ImageId image_id;
  BoundingBox box;
  int category_id = 0;
  double score = 0.0;
  double similarity = 0.0;
  std::string source_candidate;

  friend bool operator==(const MappedDetection&, const MappedDetection&) = default;
};

struct MappingStats {
  std::size_t candidates = 0;
  std::size_t skipped_missing = 0;   // dropped under MissingEmbeddingPolicy::skip
  std::size_t rejected_missing = 0;  // dropped under MissingEmbeddingPolicy::zero_vector_reject
  std::size_t below_threshold = 0;   // best similarity < min_similarity
};

/// Maps every beam candidate of every detection to its nearest category by
/// cosine similarity (ties go to the smaller category id), collapses
/// candidates of one detection that land on the same category (keeping the
/// most similar), and composes the score per `config.score_policy`.
///
/// Output is ordered by (image_id, score desc, input order, category id) and
/// does not depend on `threads`. Throws ReferenceError when a taxonomy name
/// has no embedding, and when a candidate has none under
/// MissingEmbeddingPolicy::error.
std::vector<MappedDetection> map_detections(const std::vector<Detection>& dets,
                                            const Taxonomy& taxonomy,
                                            const EmbeddingTable& table,
                                            const EvalConfig& config, int threads = 1,
                                            MappingStats* stats = nullptr);

}  // namespace openeval
