#include <gtest/gtest.h>

#include <random>

#include "openeval/geometry.hpp"
#include "openeval/pseudo_label.hpp"
#include "openeval/synth.hpp"

namespace openeval {
namespace {

Detection det(BoundingBox b, double score, DetectionSource source, ImageId image = 1) {
  return {image, b, score, {{"thing", -0.1}, {"object", -0.7}}, source};
}

TEST(MergeLabels, LowConfidenceSupplementalDropped) {
  const auto out = merge_labels({}, {det({0, 0, 10, 10}, 0.4, DetectionSource::supplemental)});
  EXPECT_TRUE(out.empty());
}

TEST(MergeLabels, ScoreAtThresholdIsDropped) {
  const auto out = merge_labels({}, {det({0, 0, 10, 10}, 0.5, DetectionSource::supplemental)});
  EXPECT_TRUE(out.empty());
  const auto kept = merge_labels({}, {det({0, 0, 10, 10}, 0.5000001, DetectionSource::supplemental)});
  EXPECT_EQ(kept.size(), 1u);
}

TEST(MergeLabels, EmptySupplementalIsIdentity) {
  const std::vector<Detection> initial{det({0, 0, 10, 10}, 0.2, DetectionSource::initial),
                                       det({5, 5, 10, 10}, 0.9, DetectionSource::initial)};
  EXPECT_EQ(merge_labels(initial, {}), initial);
}

TEST(MergeLabels, InitialWinsOnOverlap) {
  const auto out = merge_labels({det({0, 0, 10, 10}, 0.9, DetectionSource::initial)},
                                {det({0, 0, 10, 10}, 0.9, DetectionSource::supplemental)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].source, DetectionSource::initial);
}

TEST(MergeLabels, SurvivorsTaggedAndCandidatesPreserved) {
  Detection s = det({50, 50, 10, 10}, 0.8, DetectionSource::initial);  // tag is overwritten
  const auto out = merge_labels({det({0, 0, 10, 10}, 0.9, DetectionSource::initial)}, {s});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].source, DetectionSource::supplemental);
  EXPECT_EQ(out[1].candidates, s.candidates);
  // Overlap across images is not suppression.
  const auto other = merge_labels({det({0, 0, 10, 10}, 0.9, DetectionSource::initial, 1)},
                                  {det({0, 0, 10, 10}, 0.9, DetectionSource::supplemental, 2)});
  EXPECT_EQ(other.size(), 2u);
}

struct Split {
  std::vector<Detection> initial, supplemental;
};

Split synthetic_split(std::uint64_t seed, std::size_t target) {
  SynthParams p;
  p.seed = seed;
  p.scene_count = 100;
  p.boxes_per_scene = 10;
  p.extra_detections_per_gt = static_cast<int>(target / 1000) - 1;
  p.box_jitter = 0.4;
  const Fixture f = generate_fixture(p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> score(0, 1);
  std::bernoulli_distribution is_initial(0.1);
  Split s;
  for (Detection d : f.detections) {
    d.score = score(rng);
    if (is_initial(rng)) {
      d.source = DetectionSource::initial;
      s.initial.push_back(std::move(d));
    } else {
      s.supplemental.push_back(std::move(d));
    }
  }
  return s;
}

TEST(MergeLabelsProperties, InitialUntouchedAndOutputClean) {
  const Split s = synthetic_split(1, 3000);
  for (double nms_t : {0.3, 0.5, 0.7}) {
    const MergeOptions opt{0.5, nms_t};
    const auto out = merge_labels(s.initial, s.supplemental, opt);
    ASSERT_GE(out.size(), s.initial.size());
    for (std::size_t i = 0; i < s.initial.size(); ++i) ASSERT_EQ(out[i], s.initial[i]);
    for (std::size_t i = s.initial.size(); i < out.size(); ++i) {
      EXPECT_EQ(out[i].source, DetectionSource::supplemental);
      EXPECT_GT(out[i].score, opt.conf_threshold);
      for (std::size_t j = 0; j < out.size(); ++j) {
        if (j == i || !(out[j].image_id == out[i].image_id)) continue;
        EXPECT_LE(iou(out[i].box, out[j].box), nms_t);
      }
    }
  }
}

TEST(MergeLabelsProperties, Idempotent) {
  const Split s = synthetic_split(2, 2000);
  auto merged = merge_labels(s.initial, s.supplemental);
  for (Detection& d : merged) d.source = DetectionSource::initial;
  EXPECT_EQ(merge_labels(merged, {}), merged);
}

TEST(MergeLabelsProperties, RaisingConfidenceNeverGrowsOutput) {
  const Split s = synthetic_split(3, 10000);
  ASSERT_GE(s.initial.size() + s.supplemental.size(), 10000u);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (int k = 0; k <= 20; ++k) {
    const std::size_t n = merge_labels(s.initial, s.supplemental, {k / 20.0, 0.5}).size();
    EXPECT_LE(n, prev) << "conf " << k / 20.0;
    prev = n;
  }
}

}  // namespace
}  // namespace openeval
