#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "openeval/types.hpp"

namespace openeval {

// Loaders parse the formats below and validate every domain invariant.
//
//   taxonomy      {"categories":[{"id":int,"name":str,"frequency":"r"|"c"|"f"}]}
//   ground truth  {"images":[{"id":..,"width":int,"height":int}],
//                  "annotations":[{"image_id":..,"bbox":[x,y,w,h],
//                                  "category_id":int,"label":str?}]}
//   detections    JSON lines: {"image_id":..,"bbox":[x,y,w,h],"score":float,
//                  "candidates":[{"text":str,"logprob":float}],
//                  "source":"initial"|"supplemental"?}
//   embeddings    JSON lines: {"text":str,"vector":[float,...]}
//
// Parse problems throw ParseError with a 1-based line number.

Taxonomy parse_taxonomy(std::string_view document);
Taxonomy load_taxonomy(const std::filesystem::path& path);

/// When `taxonomy` is non-null every category_id must resolve in it.
GroundTruth parse_ground_truth(std::string_view document, const Taxonomy* taxonomy);
GroundTruth load_ground_truth(const std::filesystem::path& path,
                              const Taxonomy* taxonomy);

struct Dataset {
  Taxonomy taxonomy;
  GroundTruth ground_truth;
};

Dataset load_dataset(const std::filesystem::path& taxonomy_path,
                     const std::filesystem::path& ground_truth_path);

/// Candidate texts are normalized and sorted by logprob descending (stable).
/// Records without a "source" field get `default_source`.
std::vector<Detection> parse_detections(
    std::string_view document,
    DetectionSource default_source = DetectionSource::supplemental);
std::vector<Detection> load_detections(
    const std::filesystem::path& path,
    DetectionSource default_source = DetectionSource::supplemental);

EmbeddingTable parse_embeddings(std::string_view document);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Fields absent from the document keep their defaults.
EvalConfig parse_config(std::string_view document);
EvalConfig load_config(const std::filesystem::path& path);

// Writers emit the same formats; reloading yields an equal value.
std::string dump_taxonomy(const Taxonomy& taxonomy);
std::string dump_ground_truth(const GroundTruth& gt);
std::string dump_detections(const std::vector<Detection>& dets);
std::string dump_embeddings(const EmbeddingTable& table);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace openeval
