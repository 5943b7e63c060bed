#include "openeval/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace openeval {

namespace {

std::string fixed(double v, int decimals) {
  // Avoid "-0.0000".
  std::string s = fmt::format("{:.{}f}", v, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string fixed(const std::optional<double>& v, int decimals) {
  return v ? fixed(*v, decimals) : std::string("null");
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::string image_id_text(const ImageId& id) {
  return id.is_int() ? std::to_string(id.as_int()) : json_string(id.as_string());
}

std::string number_list(const std::vector<double>& xs, int decimals) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fixed(xs[i], decimals);
  }
  return out + "]";
}

}  // namespace

std::string format_fixed_ap_report(const EvalReport& r) {
  std::string out = "{\n";
  out += "  \"protocol\": \"mapped\",\n";
  out += fmt::format("  \"ap_all\": {},\n", fixed(r.ap_all, 4));
  out += fmt::format("  \"ap_r\": {},\n", fixed(r.ap_rare, 4));
  out += fmt::format("  \"ap_c\": {},\n", fixed(r.ap_common, 4));
  out += fmt::format("  \"ap_f\": {},\n", fixed(r.ap_frequent, 4));
  out += "  \"ap_per_category\": {";
  bool first = true;
  for (const auto& [id, ap] : r.ap_per_category) {
    out += fmt::format("{}\n    \"{}\": {}", first ? "" : ",", id, fixed(ap, 4));
    first = false;
  }
  out += first ? "}\n" : "\n  }\n";
  return out + "}\n";
}

std::string format_densecap_report(const EvalReport& r) {
  std::string out = "{\n";
  out += "  \"protocol\": \"meteor\",\n";
  out += fmt::format("  \"map_densecap\": {},\n", fixed(r.map_densecap, 4));
  out += fmt::format("  \"iou_grid\": {},\n", number_list(r.iou_grid, 2));
  out += fmt::format("  \"meteor_grid\": {},\n", number_list(r.meteor_grid, 2));
  out += "  \"grid_ap\": [";
  for (Eigen::Index i = 0; i < r.grid_ap.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(r.grid_ap.cols()));
    for (Eigen::Index j = 0; j < r.grid_ap.cols(); ++j) row[static_cast<std::size_t>(j)] = r.grid_ap(i, j);
    out += fmt::format("{}\n    {}", i ? "," : "", number_list(row, 4));
  }
  out += r.grid_ap.rows() ? "\n  ]\n" : "]\n";
  return out + "}\n";
}

std::string format_mapped_detections(const std::vector<MappedDetection>& mapped) {
  std::string out;
  for (const MappedDetection& m : mapped) {
    out += fmt::format(
        "{{\"image_id\":{},\"bbox\":[{},{},{},{}],\"category_id\":{},\"score\":{},"
        "\"similarity\":{},\"candidate\":{}}}\n",
        image_id_text(m.image_id), nlohmann::json(m.box.x).dump(), nlohmann::json(m.box.y).dump(),
        nlohmann::json(m.box.w).dump(), nlohmann::json(m.box.h).dump(), m.category_id,
        fixed(m.score, 6), fixed(m.similarity, 6), json_string(m.source_candidate));
  }
  return out;
}

std::string format_loss_breakdown(const LossBreakdown& l) {
  static constexpr const char* kNames[kNumLossTerms] = {"l_bce", "l_l1", "l_giou", "l_lm",
                                                        "l_align"};
  std::string out = "{\n";
  for (int k = 0; k < kNumLossTerms; ++k) {
    out += fmt::format("  \"{}\": {},\n", kNames[k], fixed(l.components[static_cast<std::size_t>(k)], 6));
  }
  out += fmt::format("  \"weights\": {},\n",
                     number_list(std::vector<double>(l.weights.begin(), l.weights.end()), 6));
  out += fmt::format("  \"total\": {}\n", fixed(l.total, 6));
  return out + "}\n";
}

std::string format_beam_result(const BeamResult& result, const std::vector<std::string>& vocab) {
  std::string out = "{\n  \"sequences\": [";
  for (std::size_t i = 0; i < result.sequences.size(); ++i) {
    const ScoredSequence& s = result.sequences[i];
    std::string tokens = "[";
    std::string text;
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      if (t) tokens += ", ";
      tokens += std::to_string(s.tokens[t]);
      const auto id = static_cast<std::size_t>(s.tokens[t]);
      if (id < vocab.size()) text += (text.empty() ? "" : " ") + vocab[id];
    }
    tokens += "]";
    out += fmt::format("{}\n    {{\"tokens\": {}, \"logprob\": {}", i ? "," : "", tokens,
                       fixed(s.logprob, 6));
    if (!vocab.empty()) out += fmt::format(", \"text\": {}", json_string(text));
    out += "}";
  }
  out += result.sequences.empty() ? "]\n" : "\n  ]\n";
  return out + "}\n";
}

}  // namespace openeval
