#include "openeval/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "openeval/text.hpp"

namespace openeval {

using nlohmann::json;

namespace {

// Where a record came from, for error messages.
struct Where {
  std::string record;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(record + ": " + msg, line);
  }
  [[noreturn]] void invalid(const std::string& msg) const {
    if (line) throw ValidationError(fmt::format("{} (line {}): {}", record, line, msg));
    throw ValidationError(record + ": " + msg);
  }
};

std::size_t line_of_byte(std::string_view doc, std::size_t byte) {
  byte = std::min(byte, doc.size());
  return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + byte, '\n'));
}

json parse_document(std::string_view doc, const char* what) {
  try {
    return json::parse(doc.begin(), doc.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed JSON: {}", what, e.what()),
                     e.byte ? line_of_byte(doc, e.byte - 1) : 0);
  }
}

const json& field(const json& obj, const char* key, const Where& w) {
  if (!obj.is_object()) w.fail("expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) w.fail(fmt::format("missing field '{}'", key));
  return *it;
}

double number(const json& v, const char* key, const Where& w) {
  if (!v.is_number()) w.fail(fmt::format("field '{}' must be a number", key));
  return v.get<double>();
}

int integer(const json& v, const char* key, const Where& w) {
  if (!v.is_number_integer()) w.fail(fmt::format("field '{}' must be an integer", key));
  return v.get<int>();
}

std::string string(const json& v, const char* key, const Where& w) {
  if (!v.is_string()) w.fail(fmt::format("field '{}' must be a string", key));
  return v.get<std::string>();
}

ImageId image_id(const json& v, const char* key, const Where& w) {
  if (v.is_number_integer()) return ImageId(v.get<std::int64_t>());
  if (v.is_string()) return ImageId(v.get<std::string>());
  w.fail(fmt::format("field '{}' must be an integer or a string", key));
}

json image_id_json(const ImageId& id) {
  return id.is_int() ? json(id.as_int()) : json(id.as_string());
}

BoundingBox bbox(const json& v, const Where& w) {
  if (!v.is_array() || v.size() != 4) w.fail("field 'bbox' must be [x,y,w,h]");
  double c[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) w.fail("field 'bbox' must contain numbers");
    c[i] = v[i].get<double>();
  }
  BoundingBox b{c[0], c[1], c[2], c[3]};
  if (!b.valid()) {
    w.invalid(fmt::format("invalid box [{}, {}, {}, {}]: need finite values, w > 0, h > 0",
                          c[0], c[1], c[2], c[3]));
  }
  return b;
}

json bbox_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

// Calls `fn(json, line)` for each non-blank line.
template <typename Fn>
void for_each_line(std::string_view doc, const char* what, Fn&& fn) {
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos <= doc.size()) {
    std::size_t end = doc.find('\n', pos);
    if (end == std::string_view::npos) end = doc.size();
    ++line;
    std::string_view text = doc.substr(pos, end - pos);
    if (text.find_first_not_of(" \t\r") != std::string_view::npos) {
      json record;
      try {
        record = json::parse(text.begin(), text.end());
      } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("{}: malformed JSON record: {}", what, e.what()), line);
      }
      fn(record, line);
    }
    if (end == doc.size()) break;
    pos = end + 1;
  }
}

const char* frequency_code(Frequency f) {
  switch (f) {
    case Frequency::rare: return "r";
    case Frequency::common: return "c";
    case Frequency::frequent: return "f";
  }
  return "f";
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

Taxonomy parse_taxonomy(std::string_view document) {
  const json doc = parse_document(document, "taxonomy");
  const Where top{"taxonomy", 0};
  const json& cats = field(doc, "categories", top);
  if (!cats.is_array()) top.fail("field 'categories' must be an array");
  std::vector<Category> out;
  out.reserve(cats.size());
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const Where w{fmt::format("category #{}", i), 0};
    Category c;
    c.id = integer(field(cats[i], "id", w), "id", w);
    c.name = string(field(cats[i], "name", w), "name", w);
    const std::string f = string(field(cats[i], "frequency", w), "frequency", w);
    if (f == "r") c.frequency = Frequency::rare;
    else if (f == "c") c.frequency = Frequency::common;
    else if (f == "f") c.frequency = Frequency::frequent;
    else w.fail(fmt::format("frequency must be \"r\", \"c\" or \"f\", got \"{}\"", f));
    out.push_back(std::move(c));
  }
  return Taxonomy(std::move(out));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  return parse_taxonomy(read_file(path));
}

GroundTruth parse_ground_truth(std::string_view document, const Taxonomy* taxonomy) {
  const json doc = parse_document(document, "ground truth");
  const Where top{"ground truth", 0};
  GroundTruth gt;

  std::unordered_set<ImageId, ImageIdHash> known_images;
  if (doc.is_object() && doc.contains("images")) {
    const json& images = doc["images"];
    if (!images.is_array()) top.fail("field 'images' must be an array");
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Where w{fmt::format("image #{}", i), 0};
      ImageInfo info;
      info.id = image_id(field(images[i], "id", w), "id", w);
      info.width = integer(field(images[i], "width", w), "width", w);
      info.height = integer(field(images[i], "height", w), "height", w);
      if (info.width <= 0 || info.height <= 0) w.invalid("width and height must be positive");
      if (!known_images.insert(info.id).second) {
        w.invalid(fmt::format("duplicate image id {}", info.id.to_string()));
      }
      gt.images.push_back(std::move(info));
    }
  }

  const json& anns = field(doc, "annotations", top);
  if (!anns.is_array()) top.fail("field 'annotations' must be an array");
  gt.annotations.reserve(anns.size());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const Where w{fmt::format("annotation #{}", i), 0};
    GroundTruthAnnotation a;
    a.image_id = image_id(field(anns[i], "image_id", w), "image_id", w);
    a.box = bbox(field(anns[i], "bbox", w), w);
    a.category_id = integer(field(anns[i], "category_id", w), "category_id", w);
    if (anns[i].contains("label") && !anns[i]["label"].is_null()) {
      a.reference_label = string(anns[i]["label"], "label", w);
    }
    if (taxonomy && !taxonomy->contains(a.category_id)) {
      throw ReferenceError(fmt::format("annotation #{}: category_id {} not in taxonomy", i,
                                       a.category_id));
    }
    if (!known_images.empty() && !known_images.count(a.image_id)) {
      throw ReferenceError(fmt::format("annotation #{}: image_id {} not in images", i,
                                       a.image_id.to_string()));
    }
    gt.annotations.push_back(std::move(a));
  }
  return gt;
}

GroundTruth load_ground_truth(const std::filesystem::path& path, const Taxonomy* taxonomy) {
  return parse_ground_truth(read_file(path), taxonomy);
}

Dataset load_dataset(const std::filesystem::path& taxonomy_path,
                     const std::filesystem::path& ground_truth_path) {
  Dataset ds;
  ds.taxonomy = load_taxonomy(taxonomy_path);
  ds.ground_truth = load_ground_truth(ground_truth_path, &ds.taxonomy);
  return ds;
}

std::vector<Detection> parse_detections(std::string_view document,
                                        DetectionSource default_source) {
  std::vector<Detection> out;
  std::size_t index = 0;
  for_each_line(document, "detections", [&](const json& r, std::size_t line) {
    const Where w{fmt::format("detection #{}", index++), line};
    Detection d;
    d.image_id = image_id(field(r, "image_id", w), "image_id", w);
    d.box = bbox(field(r, "bbox", w), w);
    d.score = number(field(r, "score", w), "score", w);
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      w.invalid(fmt::format("score {} outside [0,1]", d.score));
    }
    const json& cands = field(r, "candidates", w);
    if (!cands.is_array()) w.fail("field 'candidates' must be an array");
    if (cands.empty()) w.invalid("candidate list is empty");
    for (const json& c : cands) {
      LabelCandidate lc;
      lc.text = normalize_text(string(field(c, "text", w), "text", w));
      lc.logprob = number(field(c, "logprob", w), "logprob", w);
      if (lc.text.empty()) w.invalid("candidate text is empty after normalization");
      if (!(lc.logprob <= 0.0)) w.invalid(fmt::format("candidate logprob {} > 0", lc.logprob));
      d.candidates.push_back(std::move(lc));
    }
    std::stable_sort(d.candidates.begin(), d.candidates.end(),
                     [](const LabelCandidate& a, const LabelCandidate& b) {
                       return a.logprob > b.logprob;
                     });
    d.source = default_source;
    if (r.contains("source") && !r["source"].is_null()) {
      const std::string s = string(r["source"], "source", w);
      if (s == "initial") d.source = DetectionSource::initial;
      else if (s == "supplemental") d.source = DetectionSource::supplemental;
      else w.fail(fmt::format("source must be \"initial\" or \"supplemental\", got \"{}\"", s));
    }
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       DetectionSource default_source) {
  return parse_detections(read_file(path), default_source);
}

EmbeddingTable parse_embeddings(std::string_view document) {
  std::vector<std::string> texts;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
  for_each_line(document, "embeddings", [&](const json& r, std::size_t line) {
    const Where w{fmt::format("embedding #{}", texts.size()), line};
    texts.push_back(string(field(r, "text", w), "text", w));
    const json& v = field(r, "vector", w);
    if (!v.is_array() || v.empty()) w.fail("field 'vector' must be a nonempty array");
    std::vector<double> row;
    row.reserve(v.size());
    for (const json& x : v) {
      if (!x.is_number()) w.fail("field 'vector' must contain numbers");
      row.push_back(x.get<double>());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      w.invalid(fmt::format("dimension mismatch: expected {}, got {}", rows.front().size(),
                            row.size()));
    }
    rows.push_back(std::move(row));
    lines.push_back(line);
  });
  const Eigen::Index dim = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), dim);
  }
  return EmbeddingTable(texts, std::move(m));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file(path));
}

namespace {

std::vector<double> grid(const json& doc, const char* key, std::vector<double> fallback) {
  if (!doc.contains(key)) return fallback;
  const Where w{"config", 0};
  const json& v = doc[key];
  if (!v.is_array()) w.fail(fmt::format("field '{}' must be an array", key));
  std::vector<double> out;
  for (const json& x : v) out.push_back(number(x, key, w));
  return out;
}

}  // namespace

EvalConfig parse_config(std::string_view document) {
  const json doc = parse_document(document, "config");
  const Where w{"config", 0};
  if (!doc.is_object()) w.fail("expected an object");
  static const std::unordered_set<std::string> known{
      "iou_grid",      "meteor_grid",          "ap_iou_grid",    "per_class_cap",
      "interpolation_points", "score_policy", "min_similarity", "on_missing_embedding"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) w.fail(fmt::format("unknown field '{}'", it.key()));
  }
  EvalConfig cfg;
  cfg.iou_grid = grid(doc, "iou_grid", cfg.iou_grid);
  cfg.meteor_grid = grid(doc, "meteor_grid", cfg.meteor_grid);
  cfg.ap_iou_grid = grid(doc, "ap_iou_grid", cfg.ap_iou_grid);
  if (doc.contains("per_class_cap")) {
    cfg.per_class_cap = integer(doc["per_class_cap"], "per_class_cap", w);
  }
  if (doc.contains("interpolation_points")) {
    cfg.interpolation_points = integer(doc["interpolation_points"], "interpolation_points", w);
  }
  if (doc.contains("min_similarity")) {
    cfg.min_similarity = number(doc["min_similarity"], "min_similarity", w);
  }
  if (doc.contains("score_policy")) {
    const std::string p = string(doc["score_policy"], "score_policy", w);
    if (p == "objectness") cfg.score_policy = ScorePolicy::objectness;
    else if (p == "objectness_times_candidate_prob")
      cfg.score_policy = ScorePolicy::objectness_times_candidate_prob;
    else w.fail(fmt::format("unknown score_policy '{}'", p));
  }
  if (doc.contains("on_missing_embedding")) {
    const std::string p = string(doc["on_missing_embedding"], "on_missing_embedding", w);
    if (p == "error") cfg.on_missing_embedding = MissingEmbeddingPolicy::error;
    else if (p == "skip") cfg.on_missing_embedding = MissingEmbeddingPolicy::skip;
    else if (p == "zero_vector_reject")
      cfg.on_missing_embedding = MissingEmbeddingPolicy::zero_vector_reject;
    else w.fail(fmt::format("unknown on_missing_embedding '{}'", p));
  }
  cfg.validate();
  return cfg;
}

EvalConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

std::string dump_taxonomy(const Taxonomy& taxonomy) {
  json cats = json::array();
  for (const Category& c : taxonomy.categories()) {
    cats.push_back({{"id", c.id}, {"name", c.name}, {"frequency", frequency_code(c.frequency)}});
  }
  return json{{"categories", cats}}.dump() + "\n";
}

std::string dump_ground_truth(const GroundTruth& gt) {
  json images = json::array();
  for (const ImageInfo& im : gt.images) {
    images.push_back({{"id", image_id_json(im.id)}, {"width", im.width}, {"height", im.height}});
  }
  json anns = json::array();
  for (const GroundTruthAnnotation& a : gt.annotations) {
    json r{{"image_id", image_id_json(a.image_id)},
           {"bbox", bbox_json(a.box)},
           {"category_id", a.category_id}};
    if (a.reference_label) r["label"] = *a.reference_label;
    anns.push_back(std::move(r));
  }
  return json{{"images", images}, {"annotations", anns}}.dump() + "\n";
}

std::string dump_detections(const std::vector<Detection>& dets) {
  std::string out;
  for (const Detection& d : dets) {
    json cands = json::array();
    for (const LabelCandidate& c : d.candidates) {
      cands.push_back({{"text", c.text}, {"logprob", c.logprob}});
    }
    json r{{"image_id", image_id_json(d.image_id)},
           {"bbox", bbox_json(d.box)},
           {"score", d.score},
           {"candidates", cands},
           {"source", d.source == DetectionSource::initial ? "initial" : "supplemental"}};
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::string dump_embeddings(const EmbeddingTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.vectors().row(static_cast<Eigen::Index>(i));
    std::vector<double> v(static_cast<std::size_t>(row.size()));
    for (Eigen::Index k = 0; k < row.size(); ++k) v[static_cast<std::size_t>(k)] = row(k);
    json r{{"text", table.texts()[i]}, {"vector", v}};
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace openeval
