#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "openeval/errors.hpp"
#include "openeval/label_mapping.hpp"
#include "openeval/synth.hpp"

namespace openeval {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(CosineSimilarity, Examples) {
  EXPECT_NEAR(cosine_similarity(vec({1, 0, 0}), vec({1, 0, 0})), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(vec({1, 1}), vec({1, 0})), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_THROW(cosine_similarity(vec({0, 0}), vec({1, 0})), DomainError);
  EXPECT_THROW(cosine_similarity(vec({1, 0, 0}), vec({1, 0})), ValidationError);
}

TEST(CosineSimilarity, ClampedToUnitInterval) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd u(7);
    for (int k = 0; k < 7; ++k) u(k) = g(rng);
    EXPECT_LE(cosine_similarity(u, u * 3.7), 1.0);
    EXPECT_GE(cosine_similarity(u, -u), -1.0);
  }
}

struct MappingCase {
  Taxonomy taxonomy{{{1, "laptop", Frequency::common}, {2, "dog", Frequency::rare}}};
  EmbeddingTable table;
};

MappingCase make_setup() {
  MappingCase s;
  Eigen::MatrixXd v(5, 2);
  v << 1, 0,                                          // laptop
      0, 1,                                           // dog
      1, 0,                                           // notebook
      1 / std::sqrt(2.0), 1 / std::sqrt(2.0),         // robot dog
      0.6, 0.8;                                       // puppy
  s.table = EmbeddingTable({"laptop", "dog", "notebook", "robot dog", "puppy"}, v);
  return s;
}

Detection detection(std::vector<LabelCandidate> cands, double score = 0.8) {
  return {ImageId(1), {0, 0, 10, 10}, score, std::move(cands), DetectionSource::supplemental};
}

TEST(MapDetections, OneHotIdentity) {
  const MappingCase s = make_setup();
  const auto out = map_detections({detection({{"laptop", 0}})}, s.taxonomy, s.table, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].category_id, 1);
  EXPECT_NEAR(out[0].similarity, 1.0, 1e-12);
  EXPECT_EQ(out[0].score, 0.8);
  EXPECT_EQ(out[0].source_candidate, "laptop");
}

TEST(MapDetections, TieBreaksToSmallerCategoryId) {
  const MappingCase s = make_setup();
  const auto out = map_detections({detection({{"robot dog", 0}})}, s.taxonomy, s.table, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].category_id, 1);
  EXPECT_NEAR(out[0].similarity, 0.7071067811865476, 1e-12);
}

TEST(MapDetections, CollapsesDuplicateCategories) {
  MappingCase s = make_setup();
  Eigen::MatrixXd v(4, 2);
  v << 1, 0, 0, 1, 0.9, std::sqrt(1 - 0.81), 0.6, -0.8;
  s.table = EmbeddingTable({"laptop", "dog", "notebook", "computer"}, v);
  const auto out = map_detections({detection({{"computer", -0.1}, {"notebook", -0.5}})},
                                  s.taxonomy, s.table, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].similarity, 0.9, 1e-12);
  EXPECT_EQ(out[0].source_candidate, "notebook");
}

TEST(MapDetections, ScorePolicyAndThreshold) {
  const MappingCase s = make_setup();
  EvalConfig cfg;
  cfg.score_policy = ScorePolicy::objectness_times_candidate_prob;
  const auto out = map_detections({detection({{"laptop", std::log(0.5)}, {"dog", std::log(0.25)}})},
                                  s.taxonomy, s.table, cfg);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[0].score, 0.4, 1e-12);
  EXPECT_EQ(out[0].category_id, 1);
  EXPECT_NEAR(out[1].score, 0.2, 1e-12);

  cfg = {};
  cfg.min_similarity = 0.75;
  MappingStats stats;
  const auto kept = map_detections({detection({{"robot dog", 0}, {"puppy", -1}})}, s.taxonomy,
                                   s.table, cfg, 1, &stats);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].category_id, 2);
  EXPECT_EQ(stats.below_threshold, 1u);
}

TEST(MapDetections, MissingEmbeddingPolicies) {
  const MappingCase s = make_setup();
  const std::vector<Detection> dets{detection({{"unicorn", 0}, {"laptop", -1}})};
  EXPECT_THROW(map_detections(dets, s.taxonomy, s.table, {}), ReferenceError);
  for (auto policy : {MissingEmbeddingPolicy::skip, MissingEmbeddingPolicy::zero_vector_reject}) {
    EvalConfig cfg;
    cfg.on_missing_embedding = policy;
    MappingStats stats;
    const auto out = map_detections(dets, s.taxonomy, s.table, cfg, 1, &stats);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].category_id, 1);
    EXPECT_EQ(stats.skipped_missing + stats.rejected_missing, 1u);
  }
}

TEST(MapDetections, TaxonomyNameWithoutEmbeddingIsSetupError) {
  const MappingCase s = make_setup();
  const Taxonomy bigger({{1, "laptop", Frequency::common}, {2, "dog", Frequency::rare},
                         {3, "zebra", Frequency::frequent}});
  EXPECT_THROW(map_detections({}, bigger, s.table, {}), ReferenceError);
}

TEST(MapDetectionsProperties, PositiveScalingInvariance) {
  SynthParams p;
  p.scene_count = 20;
  p.label_noise = 0.3;
  const Fixture f = generate_fixture(p);
  const auto base = map_detections(f.detections, f.taxonomy, f.embeddings, {});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(0.01, 100);
  Eigen::MatrixXd v = f.embeddings.vectors();
  for (Eigen::Index i = 0; i < v.rows(); ++i) v.row(i) *= scale(rng);
  const EmbeddingTable scaled(f.embeddings.texts(), v);
  const auto out = map_detections(f.detections, f.taxonomy, scaled, {});
  ASSERT_EQ(out.size(), base.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].category_id, base[i].category_id);
    EXPECT_NEAR(out[i].similarity, base[i].similarity, 1e-12);
  }
}

TEST(MapDetectionsProperties, DeterministicAcrossThreadCounts) {
  SynthParams p;
  p.scene_count = 50;
  p.label_noise = 0.5;
  const Fixture f = generate_fixture(p);
  const auto one = map_detections(f.detections, f.taxonomy, f.embeddings, {}, 1);
  EXPECT_EQ(map_detections(f.detections, f.taxonomy, f.embeddings, {}, 1), one);
  EXPECT_EQ(map_detections(f.detections, f.taxonomy, f.embeddings, {}, 4), one);
  EXPECT_EQ(map_detections(f.detections, f.taxonomy, f.embeddings, {}, 13), one);
}

TEST(MapDetectionsProperties, OneOutputPerDistinctArgmaxCategory) {
  SynthParams p;
  p.scene_count = 30;
  p.label_noise = 0.6;
  p.candidates_per_detection = 3;
  const Fixture f = generate_fixture(p);
  const Eigen::MatrixXd& v = f.embeddings.vectors();
  std::size_t expected = 0;
  for (const Detection& d : f.detections) {
    std::set<int> cats;
    for (const auto& c : d.candidates) {
      const Eigen::VectorXd e = v.row(*f.embeddings.find(c.text));
      int best = -1;
      double best_sim = -2;
      for (const Category& cat : f.taxonomy.categories()) {
        const Eigen::VectorXd ce = v.row(*f.embeddings.find(cat.name));
        const double sim = cosine_similarity(e, ce);
        if (sim > best_sim || (sim == best_sim && cat.id < best)) best_sim = sim, best = cat.id;
      }
      cats.insert(best);
    }
    expected += cats.size();
  }
  EXPECT_EQ(map_detections(f.detections, f.taxonomy, f.embeddings, {}).size(), expected);
}

}  // namespace
}  // namespace openeval
