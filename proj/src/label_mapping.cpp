#include "openeval/label_mapping.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "openeval/parallel.hpp"
#include "openeval/text.hpp"

namespace openeval {

namespace {

struct Nearest {
  bool found = false;  // text has an embedding
  int category_id = 0;
  double similarity = 0.0;
};

}  // namespace

std::vector<MappedDetection> map_detections(const std::vector<Detection>& dets,
                                            const Taxonomy& taxonomy,
                                            const EmbeddingTable& table,
                                            const EvalConfig& config, int threads,
                                            MappingStats* stats) {
  config.validate();

  // Unit-norm category embeddings in ascending id order, so the first
  // maximum is the smallest id.
  std::vector<Category> cats = taxonomy.categories();
  std::sort(cats.begin(), cats.end(),
            [](const Category& a, const Category& b) { return a.id < b.id; });
  Eigen::MatrixXd category_vecs(static_cast<Eigen::Index>(cats.size()), table.dim());
  for (std::size_t k = 0; k < cats.size(); ++k) {
    const std::string name = normalize_text(cats[k].name);
    const auto row = table.find(name);
    if (!row) {
      throw ReferenceError(
          fmt::format("category {} ('{}') has no embedding", cats[k].id, name));
    }
    category_vecs.row(static_cast<Eigen::Index>(k)) = table.vectors().row(*row).normalized();
  }

  // Every distinct candidate text is mapped once.
  std::unordered_map<std::string, std::size_t> text_slot;
  std::vector<const std::string*> texts;
  for (const Detection& d : dets) {
    for (const LabelCandidate& c : d.candidates) {
      if (text_slot.emplace(c.text, texts.size()).second) texts.push_back(&c.text);
    }
  }
  std::vector<Nearest> nearest(texts.size());
  parallel_for(texts.size(), threads, [&](std::size_t i) {
    const std::string key = normalize_text(*texts[i]);
    const auto row = table.find(key);
    if (!row || cats.empty()) return;
    const Eigen::VectorXd v = table.vectors().row(*row).transpose().normalized();
    const Eigen::VectorXd sims = category_vecs * v;
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < sims.size(); ++k) {
      if (sims(k) > sims(best)) best = k;
    }
    nearest[i] = {true, cats[static_cast<std::size_t>(best)].id,
                  std::clamp(sims(best), -1.0, 1.0)};
  });

  MappingStats local;
  struct Keyed {
    MappedDetection m;
    std::size_t det_index;
  };
  std::vector<Keyed> out;
  for (std::size_t di = 0; di < dets.size(); ++di) {
    const Detection& d = dets[di];
    // category id -> (similarity, candidate index); first candidate wins ties.
    std::vector<std::pair<int, std::pair<double, std::size_t>>> picks;
    for (std::size_t ci = 0; ci < d.candidates.size(); ++ci) {
      ++local.candidates;
      const Nearest& n = nearest[text_slot.at(d.candidates[ci].text)];
      if (!n.found) {
        switch (config.on_missing_embedding) {
          case MissingEmbeddingPolicy::error:
            throw ReferenceError(fmt::format("detection #{}: candidate '{}' has no embedding", di,
                                             d.candidates[ci].text));
          case MissingEmbeddingPolicy::skip:
            ++local.skipped_missing;
            break;
          case MissingEmbeddingPolicy::zero_vector_reject:
            ++local.rejected_missing;
            break;
        }
        continue;
      }
      if (n.similarity < config.min_similarity) {
        ++local.below_threshold;
        continue;
      }
      auto it = std::find_if(picks.begin(), picks.end(),
                             [&](const auto& p) { return p.first == n.category_id; });
      if (it == picks.end()) {
        picks.push_back({n.category_id, {n.similarity, ci}});
      } else if (n.similarity > it->second.first) {
        it->second = {n.similarity, ci};
      }
    }
    for (const auto& [cat, pick] : picks) {
      const LabelCandidate& c = d.candidates[pick.second];
      MappedDetection m;
      m.image_id = d.image_id;
      m.box = d.box;
      m.category_id = cat;
      m.similarity = pick.first;
      m.source_candidate = c.text;
      m.score = config.score_policy == ScorePolicy::objectness ? d.score
                                                               : d.score * std::exp(c.logprob);
      out.push_back({std::move(m), di});
    }
  }

  std::sort(out.begin(), out.end(), [](const Keyed& a, const Keyed& b) {
    if (a.m.image_id != b.m.image_id) return a.m.image_id < b.m.image_id;
    if (a.m.score != b.m.score) return a.m.score > b.m.score;
    if (a.det_index != b.det_index) return a.det_index < b.det_index;
    return a.m.category_id < b.m.category_id;
  });
  std::vector<MappedDetection> result;
  result.reserve(out.size());
  for (Keyed& k : out) result.push_back(std::move(k.m));
  if (stats) *stats = local;
  return result;
}

}  // namespace openeval
