#include "openeval/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include <fmt/format.h>

#include "openeval/geometry.hpp"
#include "openeval/io.hpp"

namespace openeval {

namespace {

constexpr int kExtraDims = 8;
constexpr double kOwnCosine = 0.95;
// Ground-truth boxes in one scene stay below the loosest default IoU
// threshold, so a relabelled detection can never hit a neighbour.
constexpr double kMaxSceneIou = 0.3;
constexpr int kPlacementAttempts = 10000;

// Raw 64-bit engine plus explicit conversions, so fixtures do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return static_cast<int>(uniform() * n); }
  double normal() {
    // Box-Muller.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string synonym_text(int category, int s) {
  static constexpr std::array<const char*, 12> kAdjectives{
      "small", "large", "old", "new", "red", "blue", "round", "flat", "tall", "short", "dark",
      "bright"};
  if (s < static_cast<int>(kAdjectives.size())) {
    return fmt::format("{} kind{}", kAdjectives[static_cast<std::size_t>(s)], category);
  }
  return fmt::format("variant{} kind{}", s, category);
}

}  // namespace

void SynthParams::validate() const {
  if (scene_count < 0 || boxes_per_scene < 0) throw ValidationError("scene counts must be >= 0");
  if (categories_per_bucket < 1) throw ValidationError("categories_per_bucket must be >= 1");
  if (synonyms_per_category < 1) throw ValidationError("synonyms_per_category must be >= 1");
  if (candidates_per_detection < 1) throw ValidationError("candidates_per_detection must be >= 1");
  if (extra_detections_per_gt < 0) throw ValidationError("extra_detections_per_gt must be >= 0");
  if (!(box_jitter >= 0.0 && box_jitter <= 1.0)) throw ValidationError("box_jitter must lie in [0,1]");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ValidationError("label_noise must lie in [0,1]");
  if (image_width < 200 || image_height < 200) throw ValidationError("image must be at least 200x200");
}

Fixture generate_fixture(const SynthParams& p) {
  p.validate();
  Rng rng(p.seed);
  const int num_categories = 3 * p.categories_per_bucket;

  std::vector<Category> cats;
  for (int k = 0; k < num_categories; ++k) {
    const int bucket = k / p.categories_per_bucket;
    cats.push_back({k + 1, fmt::format("kind{} object", k + 1),
                    bucket == 0 ? Frequency::rare
                                : (bucket == 1 ? Frequency::common : Frequency::frequent)});
  }

  // Category k owns basis direction k; synonyms lean into it and spread the
  // rest of their mass over the shared extra dimensions.
  const int dim = num_categories + kExtraDims;
  const int synonyms = p.synonyms_per_category;
  std::vector<std::string> texts;
  Eigen::MatrixXd vecs = Eigen::MatrixXd::Zero(num_categories * (1 + synonyms), dim);
  Eigen::Index row = 0;
  const double spread = std::sqrt(1.0 - kOwnCosine * kOwnCosine);
  for (int k = 0; k < num_categories; ++k) {
    texts.push_back(cats[static_cast<std::size_t>(k)].name);
    vecs(row++, k) = 1.0;
    for (int s = 0; s < synonyms; ++s) {
      Eigen::VectorXd extra(kExtraDims);
      for (int d = 0; d < kExtraDims; ++d) extra(d) = rng.normal();
      extra.normalize();
      texts.push_back(synonym_text(k + 1, s));
      vecs(row, k) = kOwnCosine;
      vecs.row(row).tail(kExtraDims) = spread * extra.transpose();
      // Cross-category cosine is bounded by the product of off-category norms.
      const double off = vecs.row(row).tail(kExtraDims).norm();
      if (!(vecs(row, k) / vecs.row(row).norm() >= 0.9 && off * off <= 0.1)) {
        throw Error("synthetic embedding violates the cluster separation bounds");
      }
      ++row;
    }
  }

  Fixture f;
  f.taxonomy = Taxonomy(cats);
  f.embeddings = EmbeddingTable(texts, std::move(vecs));

  const int ncand = std::min(p.candidates_per_detection, synonyms);
  auto labels_for = [&](int category, int first_synonym) {
    std::vector<LabelCandidate> out;
    double lp = -rng.uniform(0.01, 0.5);
    for (int c = 0; c < ncand; ++c) {
      out.push_back({synonym_text(category, (first_synonym + c) % synonyms), lp});
      lp -= rng.uniform(0.5, 2.0);
    }
    return out;
  };
  auto other_category = [&](int category) {
    const int shift = 1 + rng.index(num_categories - 1);
    return (category - 1 + shift) % num_categories + 1;
  };
  auto jitter = [&](const BoundingBox& b, double amount) {
    BoundingBox j = b;
    if (amount > 0) {
      j.x = round2(b.x + rng.uniform(-amount, amount) * b.w);
      j.y = round2(b.y + rng.uniform(-amount, amount) * b.h);
      j.w = std::max(1.0, round2(b.w * (1.0 + rng.uniform(-amount, amount))));
      j.h = std::max(1.0, round2(b.h * (1.0 + rng.uniform(-amount, amount))));
    }
    return j;
  };

  for (int scene = 1; scene <= p.scene_count; ++scene) {
    f.ground_truth.images.push_back({ImageId(std::int64_t{scene}), p.image_width, p.image_height});
    std::vector<BoundingBox> placed;
    for (int b = 0; b < p.boxes_per_scene; ++b) {
      const int category = 1 + rng.index(num_categories);
      const int synonym = rng.index(synonyms);
      BoundingBox box;
      for (int attempt = 0;; ++attempt) {
        if (attempt == kPlacementAttempts) {
          throw ValidationError(fmt::format(
              "scene {}: cannot place {} boxes with pairwise IoU < {}; lower boxes_per_scene",
              scene, p.boxes_per_scene, kMaxSceneIou));
        }
        box.w = round2(rng.uniform(20.0, 200.0));
        box.h = round2(rng.uniform(20.0, 200.0));
        box.x = round2(rng.uniform(0.0, p.image_width - box.w));
        box.y = round2(rng.uniform(0.0, p.image_height - box.h));
        const bool clear = std::all_of(placed.begin(), placed.end(), [&](const BoundingBox& o) {
          return iou(box, o) < kMaxSceneIou;
        });
        if (clear) break;
      }
      placed.push_back(box);
      f.ground_truth.annotations.push_back(
          {ImageId(std::int64_t{scene}), box, category, synonym_text(category, synonym)});

      Detection d;
      d.image_id = ImageId(std::int64_t{scene});
      d.box = jitter(box, p.box_jitter);
      d.score = round2(rng.uniform(0.05, 1.0));
      const bool noisy = p.label_noise > 0 && rng.uniform() < p.label_noise && num_categories > 1;
      d.candidates = noisy ? labels_for(other_category(category), rng.index(synonyms))
                           : labels_for(category, synonym);
      f.detections.push_back(std::move(d));

      for (int e = 0; e < p.extra_detections_per_gt; ++e) {
        Detection x;
        x.image_id = ImageId(std::int64_t{scene});
        x.box = jitter(box, std::max(0.5, p.box_jitter));
        x.score = round2(rng.uniform(0.01, 0.5));
        x.candidates = labels_for(1 + rng.index(num_categories), rng.index(synonyms));
        f.detections.push_back(std::move(x));
      }
    }
  }
  return f;
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "taxonomy.json", dump_taxonomy(fixture.taxonomy));
  write_file(dir / "ground_truth.json", dump_ground_truth(fixture.ground_truth));
  write_file(dir / "detections.jsonl", dump_detections(fixture.detections));
  write_file(dir / "embeddings.jsonl", dump_embeddings(fixture.embeddings));
}

}  // namespace openeval
