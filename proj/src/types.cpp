#include "openeval/types.hpp"

#include <unordered_set>

#include <fmt/format.h>

#include "openeval/text.hpp"

namespace openeval {

Taxonomy::Taxonomy(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const Category& c = categories_[i];
    if (c.id <= 0) {
      throw ValidationError(fmt::format("category #{}: id must be positive, got {}", i, c.id));
    }
    const std::string norm = normalize_text(c.name);
    if (norm.empty()) {
      throw ValidationError(fmt::format("category #{} (id {}): empty name", i, c.id));
    }
    if (!index_.emplace(c.id, i).second) {
      throw ValidationError(fmt::format("category #{}: duplicate id {}", i, c.id));
    }
    if (!names.insert(norm).second) {
      throw ValidationError(
          fmt::format("category #{} (id {}): duplicate name '{}'", i, c.id, norm));
    }
  }
}

const Category& Taxonomy::at(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ReferenceError(fmt::format("unknown category id {}", id));
  }
  return categories_[it->second];
}

EmbeddingTable::EmbeddingTable(const std::vector<std::string>& texts,
                               Eigen::MatrixXd vectors)
    : vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(texts.size()) != vectors_.rows()) {
    throw ValidationError("embedding table: text count does not match vector count");
  }
  if (!texts.empty() && vectors_.cols() == 0) {
    throw ValidationError("embedding table: dimension must be positive");
  }
  texts_.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::string norm = normalize_text(texts[i]);
    if (norm.empty()) {
      throw ValidationError(fmt::format("embedding #{}: empty text", i));
    }
    const auto row = static_cast<Eigen::Index>(i);
    if (!vectors_.row(row).allFinite()) {
      throw ValidationError(fmt::format("embedding #{} ('{}'): non-finite value", i, norm));
    }
    if (vectors_.row(row).squaredNorm() == 0.0) {
      throw ValidationError(fmt::format("embedding #{} ('{}'): zero-norm vector", i, norm));
    }
    if (!index_.emplace(norm, row).second) {
      throw ValidationError(
          fmt::format("embedding #{}: duplicate normalized text '{}'", i, norm));
    }
    texts_.push_back(std::move(norm));
  }
}

std::optional<Eigen::Index> EmbeddingTable::find(const std::string& normalized) const {
  auto it = index_.find(normalized);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

void check_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw ValidationError(fmt::format("{}: grid must be nonempty", name));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
      throw ValidationError(fmt::format("{}: value {} outside [0,1]", name, grid[i]));
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError(fmt::format("{}: grid must be strictly increasing", name));
    }
  }
}

}  // namespace

void EvalConfig::validate() const {
  check_grid(iou_grid, "iou_grid");
  check_grid(meteor_grid, "meteor_grid");
  check_grid(ap_iou_grid, "ap_iou_grid");
  if (per_class_cap <= 0) throw ValidationError("per_class_cap must be positive");
  if (interpolation_points < 0 || interpolation_points == 1) {
    throw ValidationError("interpolation_points must be 0 (all-point) or >= 2");
  }
  if (!(min_similarity >= 0.0 && min_similarity <= 1.0)) {
    throw ValidationError("min_similarity must lie in [0,1]");
  }
}

}  // namespace openeval
