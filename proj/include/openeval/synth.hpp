#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "openeval/types.hpp"

namespace openeval {

struct SynthParams {
  int scene_count = 100;
  int boxes_per_scene = 10;
  int categories_per_bucket = 5;  // categories in each of rare / common / frequent
  int synonyms_per_category = 3;
  int candidates_per_detection = 3;  // beam candidates, capped by synonyms_per_category
  int extra_detections_per_gt = 0;   // additional low-score clutter per GT box
  double box_jitter = 0.0;           // fraction of box size
  double label_noise = 0.0;          // probability a detection is labelled as another category
  std::uint64_t seed = 0;
  int image_width = 640;
  int image_height = 480;

  void validate() const;
};

/// A complete evaluation input set.
struct Fixture {
  Taxonomy taxonomy;
  GroundTruth ground_truth;
  std::vector<Detection> detections;
  EmbeddingTable embeddings;
};

/// Deterministic for a given seed. Category names and synonyms are two-word
/// phrases; each synonym embedding has cosine 0.95 with its category and at
/// most 0.1 with every other category and its synonyms (checked here). With
/// zero jitter and noise every GT box gets one exact-copy detection whose top
/// candidate equals the GT reference label.
Fixture generate_fixture(const SynthParams& params);

/// Writes taxonomy.json, ground_truth.json, detections.jsonl and
/// embeddings.jsonl into `dir` (created if needed).
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace openeval
