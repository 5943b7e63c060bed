#include "openeval/cli.hpp"

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "openeval/ap.hpp"
#include "openeval/assignment.hpp"
#include "openeval/beam_search.hpp"
#include "openeval/geometry.hpp"
#include "openeval/io.hpp"
#include "openeval/label_mapping.hpp"
#include "openeval/losses.hpp"
#include "openeval/meteor.hpp"
#include "openeval/parallel.hpp"
#include "openeval/pseudo_label.hpp"
#include "openeval/report.hpp"
#include "openeval/synth.hpp"

namespace openeval {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;

// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string protocol;
  std::string gt, det, taxonomy, emb, config, out;
  std::string initial, supplemental, fixture, model, out_dir;
  int threads = default_threads();
  double conf = 0.5, nms_iou = 0.5;
  MeteorParams meteor;
  std::string candidate, reference;
  BeamOptions beam;
  SynthParams synth;
};

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
}

EvalConfig config_of(const Options& o) {
  return o.config.empty() ? EvalConfig{} : load_config(o.config);
}

// Fixture parsing for the `losses` subcommand.
BoundingBox box_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) throw ParseError(where + ": expected [x,y,w,h]", 0);
  return checked_box(v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                     v[3].get<double>(), where);
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) {
    throw ParseError(where + ": expected a nonempty array of rows", 0);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != v[0].size()) throw ParseError(where + ": ragged rows", 0);
    for (std::size_t j = 0; j < v[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  return m;
}

LossBreakdown run_losses_fixture(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("losses fixture: malformed JSON: {}", e.what()), 0);
  }
  try {
    std::array<double, kNumLossTerms> components{};
    if (doc.contains("pred_boxes")) {
      const auto& size = doc.at("image_size");
      const ImageSize image{size.at(0).get<double>(), size.at(1).get<double>()};
      std::vector<BoundingBox> preds, gts;
      for (std::size_t i = 0; i < doc["pred_boxes"].size(); ++i) {
        preds.push_back(box_of(doc["pred_boxes"][i], fmt::format("pred_boxes[{}]", i)));
      }
      for (std::size_t i = 0; i < doc.at("gt_boxes").size(); ++i) {
        gts.push_back(box_of(doc["gt_boxes"][i], fmt::format("gt_boxes[{}]", i)));
      }
      const auto probs = doc.at("pred_fg_probs").get<std::vector<double>>();
      MatchWeights mw;
      if (doc.contains("match_weights")) {
        const auto w = doc["match_weights"].get<std::vector<double>>();
        if (w.size() != 3) throw ValidationError("match_weights must have 3 entries");
        mw = {w[0], w[1], w[2]};
      }
      // The matching cost needs p strictly inside (0,1); the losses clamp.
      std::vector<double> match_probs = probs;
      for (double& p : match_probs) p = std::clamp(p, 1e-7, 1.0 - 1e-7);
      const Assignment a = solve_assignment(build_cost_matrix(preds, match_probs, gts, mw, image));
      const DetectionLosses d = detection_losses(a, preds, probs, gts, image);
      components[kBce] = d.bce;
      components[kL1] = d.l1;
      components[kGiou] = d.giou;
    }
    if (doc.contains("sequences")) {
      std::vector<TokenDistributionSequence> seqs;
      for (std::size_t i = 0; i < doc["sequences"].size(); ++i) {
        const json& s = doc["sequences"][i];
        seqs.push_back({matrix_of(s.at("steps"), fmt::format("sequences[{}].steps", i)),
                        s.at("target").get<std::vector<int>>()});
      }
      components[kLm] = lm_loss(seqs);
    }
    if (doc.contains("alignment")) {
      const json& al = doc["alignment"];
      components[kAlign] = align_loss(
          {matrix_of(al.at("scores"), "alignment.scores"), al.at("positives").get<std::vector<int>>()});
    }
    std::array<double, kNumLossTerms> weights{1.0, 1.0, 1.0, 1.0, 1.0};
    if (doc.contains("weights")) {
      const auto w = doc["weights"].get<std::vector<double>>();
      if (w.size() != kNumLossTerms) throw ValidationError("weights must have 5 entries");
      std::copy(w.begin(), w.end(), weights.begin());
    }
    return total_loss(components, weights);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("losses fixture: {}", e.what()), 0);
  }
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const EvalConfig cfg = config_of(o);
  if (o.protocol == "mapped") {
    if (o.taxonomy.empty() || o.emb.empty()) {
      throw UsageError("--protocol mapped requires --taxonomy and --emb");
    }
    const Dataset ds = load_dataset(o.taxonomy, o.gt);
    const EmbeddingTable table = load_embeddings(o.emb);
    const auto dets = load_detections(o.det);
    const auto mapped = map_detections(dets, ds.taxonomy, table, cfg, o.threads);
    emit(o, out, format_fixed_ap_report(
                     evaluate_fixed_ap(mapped, ds.ground_truth.annotations, ds.taxonomy, cfg, o.threads)));
  } else {
    std::optional<Taxonomy> taxonomy;
    if (!o.taxonomy.empty()) taxonomy = load_taxonomy(o.taxonomy);
    const GroundTruth gt = load_ground_truth(o.gt, taxonomy ? &*taxonomy : nullptr);
    const auto dets = load_detections(o.det);
    emit(o, out, format_densecap_report(
                     evaluate_densecap(dets, gt.annotations, cfg, o.meteor, o.threads)));
  }
  return kExitOk;
}

int cmd_map_labels(const Options& o, std::ostream& out) {
  const EvalConfig cfg = config_of(o);
  const Taxonomy taxonomy = load_taxonomy(o.taxonomy);
  const EmbeddingTable table = load_embeddings(o.emb);
  const auto dets = load_detections(o.det);
  emit(o, out, format_mapped_detections(map_detections(dets, taxonomy, table, cfg, o.threads)));
  return kExitOk;
}

int cmd_merge(const Options& o, std::ostream& out) {
  const auto initial = load_detections(o.initial, DetectionSource::initial);
  const auto supplemental = load_detections(o.supplemental, DetectionSource::supplemental);
  emit(o, out, dump_detections(merge_labels(initial, supplemental, {o.conf, o.nms_iou})));
  return kExitOk;
}

int cmd_nms(const Options& o, std::ostream& out) {
  emit(o, out, dump_detections(nms(load_detections(o.det), o.nms_iou)));
  return kExitOk;
}

int cmd_losses(const Options& o, std::ostream& out) {
  emit(o, out, format_loss_breakdown(run_losses_fixture(read_file(o.fixture))));
  return kExitOk;
}

int cmd_meteor(const Options& o, std::ostream& out) {
  emit(o, out, fmt::format("{:.6f}\n", meteor(o.candidate, o.reference, o.meteor)));
  return kExitOk;
}

int cmd_beam(const Options& o, std::ostream& out) {
  const std::string text = read_file(o.model);
  const TabularModel model = TabularModel::parse(text);
  std::vector<std::string> vocab;
  const json doc = json::parse(text);
  if (doc.contains("vocab") && doc["vocab"].is_array()) {
    for (const json& w : doc["vocab"]) vocab.push_back(w.is_string() ? w.get<std::string>() : w.dump());
  }
  emit(o, out, format_beam_result(beam_decode(model, o.beam), vocab));
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  std::string report;
  if (!o.config.empty()) {
    load_config(o.config);
    report += "config: ok\n";
  }
  std::optional<Taxonomy> taxonomy;
  if (!o.taxonomy.empty()) {
    taxonomy = load_taxonomy(o.taxonomy);
    report += fmt::format("taxonomy: {} categories\n", taxonomy->size());
  }
  if (!o.gt.empty()) {
    const GroundTruth gt = load_ground_truth(o.gt, taxonomy ? &*taxonomy : nullptr);
    std::size_t labelled = 0;
    for (const auto& a : gt.annotations) labelled += a.reference_label.has_value();
    report += fmt::format("ground truth: {} images, {} annotations, {} with labels\n",
                          gt.images.size(), gt.annotations.size(), labelled);
  }
  if (!o.det.empty()) {
    report += fmt::format("detections: {}\n", load_detections(o.det).size());
  }
  if (!o.emb.empty()) {
    const EmbeddingTable t = load_embeddings(o.emb);
    report += fmt::format("embeddings: {} entries, dim {}\n", t.size(), t.dim());
  }
  if (report.empty()) throw UsageError("validate needs at least one input file");
  emit(o, out, report);
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const Fixture f = generate_fixture(o.synth);
  write_fixture(f, o.out_dir);
  out << fmt::format("wrote {} annotations, {} detections, {} categories to {}\n",
                     f.ground_truth.annotations.size(), f.detections.size(), f.taxonomy.size(),
                     o.out_dir);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Evaluation toolkit for open-ended (free-form label) object detection"};
  app.name("openeval");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  auto add_threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "Worker threads; output does not depend on it")
        ->check(CLI::PositiveNumber);
  };
  auto add_meteor = [&](CLI::App* c) {
    c->add_option("--meteor-gamma", o.meteor.gamma, "METEOR fragmentation penalty weight")
        ->check(CLI::Range(0.0, 1.0));
    c->add_option("--meteor-beta", o.meteor.beta, "METEOR fragmentation penalty exponent")
        ->check(CLI::PositiveNumber);
    c->add_flag("--stem", o.meteor.stemming, "Match Porter stems instead of surface forms");
  };

  auto* evaluate = app.add_subcommand("evaluate", "Compute AP for detections against ground truth");
  evaluate->add_option("--protocol", o.protocol, "mapped: embedding label mapping + fixed AP; "
                                                 "meteor: IoU x METEOR dense-caption mAP")
      ->required()
      ->check(CLI::IsMember({"mapped", "meteor"}));
  evaluate->add_option("--gt", o.gt, "Ground-truth file")->required();
  evaluate->add_option("--det", o.det, "Detections file (JSON lines)")->required();
  evaluate->add_option("--taxonomy", o.taxonomy, "Taxonomy file (required for mapped)");
  evaluate->add_option("--emb", o.emb, "Embedding file (required for mapped)");
  evaluate->add_option("--config", o.config, "EvalConfig document overriding defaults");
  evaluate->add_option("--out", o.out, "Output file (default: stdout)");
  add_threads(evaluate);
  add_meteor(evaluate);

  auto* map_labels = app.add_subcommand("map-labels", "Map free-form labels onto a taxonomy");
  map_labels->add_option("--det", o.det, "Detections file")->required();
  map_labels->add_option("--taxonomy", o.taxonomy, "Taxonomy file")->required();
  map_labels->add_option("--emb", o.emb, "Embedding file")->required();
  map_labels->add_option("--config", o.config, "EvalConfig document overriding defaults");
  map_labels->add_option("--out", o.out, "Output file (default: stdout)");
  add_threads(map_labels);

  auto* merge = app.add_subcommand("merge-pseudo", "Merge initial and supplemental pseudo-labels");
  merge->add_option("--initial", o.initial, "Initial (authoritative) detections")->required();
  merge->add_option("--supplemental", o.supplemental, "Supplemental detections")->required();
  merge->add_option("--conf", o.conf, "Keep supplemental detections with score > conf")
      ->check(CLI::Range(0.0, 1.0));
  merge->add_option("--nms", o.nms_iou, "IoU above which a supplemental box is suppressed")
      ->check(CLI::Range(0.0, 1.0));
  merge->add_option("--out", o.out, "Output file (default: stdout)");

  auto* nms_cmd = app.add_subcommand("nms", "Class-agnostic greedy non-maximum suppression");
  nms_cmd->add_option("--det", o.det, "Detections file")->required();
  nms_cmd->add_option("--iou", o.nms_iou, "Suppression IoU threshold")->check(CLI::Range(0.0, 1.0));
  nms_cmd->add_option("--out", o.out, "Output file (default: stdout)");

  auto* losses = app.add_subcommand("losses", "Evaluate the training losses on a fixture");
  losses->add_option("--fixture", o.fixture, "Loss fixture document")->required();
  losses->add_option("--out", o.out, "Output file (default: stdout)");

  auto* meteor_cmd = app.add_subcommand("meteor", "METEOR score of a candidate against a reference");
  meteor_cmd->add_option("candidate", o.candidate, "Candidate text")->required();
  meteor_cmd->add_option("reference", o.reference, "Reference text")->required();
  meteor_cmd->add_option("--gamma", o.meteor.gamma, "Fragmentation penalty weight")
      ->check(CLI::Range(0.0, 1.0));
  meteor_cmd->add_option("--beta", o.meteor.beta, "Fragmentation penalty exponent")
      ->check(CLI::PositiveNumber);
  meteor_cmd->add_flag("--stem", o.meteor.stemming, "Match Porter stems instead of surface forms");

  auto* beam = app.add_subcommand("beam-demo", "Beam-search a tabular language model");
  beam->add_option("--model", o.model, "Tabular model document")->required();
  beam->add_option("--beam-size", o.beam.beam_size, "Beam width")->check(CLI::PositiveNumber);
  beam->add_option("--max-len", o.beam.max_len, "Maximum sequence length")->check(CLI::PositiveNumber);
  beam->add_option("--length-penalty", o.beam.length_penalty,
                   "Rank by logprob / length^penalty (0 = raw logprob)")
      ->check(CLI::NonNegativeNumber);
  beam->add_option("--out", o.out, "Output file (default: stdout)");

  auto* validate = app.add_subcommand("validate", "Load and validate input files");
  validate->add_option("--taxonomy", o.taxonomy, "Taxonomy file");
  validate->add_option("--gt", o.gt, "Ground-truth file (checked against --taxonomy if given)");
  validate->add_option("--det", o.det, "Detections file");
  validate->add_option("--emb", o.emb, "Embedding file");
  validate->add_option("--config", o.config, "EvalConfig document");
  validate->add_option("--out", o.out, "Output file (default: stdout)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic evaluation fixture");
  synth->add_option("--out-dir", o.out_dir, "Directory for the four fixture files")->required();
  synth->add_option("--scenes", o.synth.scene_count, "Number of images");
  synth->add_option("--boxes", o.synth.boxes_per_scene, "GT boxes per image");
  synth->add_option("--categories-per-bucket", o.synth.categories_per_bucket,
                    "Categories in each frequency bucket");
  synth->add_option("--synonyms", o.synth.synonyms_per_category, "Synonyms per category");
  synth->add_option("--candidates", o.synth.candidates_per_detection, "Beam candidates per detection");
  synth->add_option("--extra", o.synth.extra_detections_per_gt, "Clutter detections per GT box");
  synth->add_option("--jitter", o.synth.box_jitter, "Box jitter as a fraction of box size");
  synth->add_option("--noise", o.synth.label_noise, "Probability of a wrong-category label");
  synth->add_option("--seed", o.synth.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    // Show the help of the subcommand that failed to parse, if any.
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (map_labels->parsed()) return cmd_map_labels(o, out);
    if (merge->parsed()) return cmd_merge(o, out);
    if (nms_cmd->parsed()) return cmd_nms(o, out);
    if (losses->parsed()) return cmd_losses(o, out);
    if (meteor_cmd->parsed()) return cmd_meteor(o, out);
    if (beam->parsed()) return cmd_beam(o, out);
    if (validate->parsed()) return cmd_validate(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace openeval
