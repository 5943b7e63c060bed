#pragma once

#include <string>
#include <vector>

#include "openeval/ap.hpp"
#include "openeval/beam_search.hpp"
#include "openeval/label_mapping.hpp"
#include "openeval/losses.hpp"

namespace openeval {

// Stable text renderings used by the CLI. Metrics are printed with a fixed
// number of decimals so outputs can be compared byte for byte; absent values
// are written as null.

/// Taxonomy-protocol report, 4 decimals.
std::string format_fixed_ap_report(const EvalReport& report);

/// Dense-caption report with the full grid, 4 decimals.
std::string format_densecap_report(const EvalReport& report);

/// One JSON record per line, 6 decimals for score and similarity.
std::string format_mapped_detections(const std::vector<MappedDetection>& mapped);

std::string format_loss_breakdown(const LossBreakdown& losses);

/// `vocab` (optional) renders token ids as words.
std::string format_beam_result(const BeamResult& result, const std::vector<std::string>& vocab = {});

}  // namespace openeval
