#include "openeval/meteor.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "openeval/errors.hpp"
#include "openeval/text.hpp"

namespace openeval {

void MeteorParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("meteor gamma must lie in [0,1]");
  if (!(beta > 0.0)) throw ValidationError("meteor beta must be positive");
}

namespace {

constexpr int kExhaustiveMatchLimit = 8;

// Exhaustive search over maximum-cardinality alignments, in candidate order.
class ChunkSearch {
 public:
  ChunkSearch(const std::vector<std::string>& cand, const std::vector<std::string>& ref)
      : cand_(cand), ref_(ref), ref_used_(ref.size(), 0) {
    std::map<std::string, int> cc, rc;
    for (const auto& w : cand) ++cc[w];
    for (const auto& w : ref) ++rc[w];
    for (const auto& [w, n] : cc) {
      auto it = rc.find(w);
      const int r = it == rc.end() ? 0 : it->second;
      skips_[w] = n - std::min(n, r);
    }
  }

  int min_chunks() {
    search(0, -2, -2, 0);
    return best_;
  }

 private:
  void search(std::size_t i, int prev_c, int prev_r, int chunks) {
    if (chunks >= best_) return;
    if (i == cand_.size()) {
      best_ = chunks;
      return;
    }
    const std::string& w = cand_[i];
    const int ci = static_cast<int>(i);
    for (std::size_t r = 0; r < ref_.size(); ++r) {
      if (ref_used_[r] || ref_[r] != w) continue;
      const int ri = static_cast<int>(r);
      const bool extends = prev_c == ci - 1 && prev_r == ri - 1;
      ref_used_[r] = 1;
      search(i + 1, ci, ri, chunks + (extends ? 0 : 1));
      ref_used_[r] = 0;
    }
    int& skips = skips_[w];
    if (skips > 0) {
      --skips;
      search(i + 1, prev_c, prev_r, chunks);
      ++skips;
    }
  }

  const std::vector<std::string>& cand_;
  const std::vector<std::string>& ref_;
  std::vector<char> ref_used_;
  std::map<std::string, int> skips_;
  int best_ = std::numeric_limits<int>::max();
};

int greedy_chunks(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::vector<char> used(ref.size(), 0);
  int chunks = 0;
  int prev_c = -2, prev_r = -2;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    int pick = -1;
    const auto next = static_cast<std::size_t>(prev_r + 1);
    if (prev_c == static_cast<int>(i) - 1 && prev_r >= 0 && next < ref.size() && !used[next] &&
        ref[next] == cand[i]) {
      pick = static_cast<int>(next);
    } else {
      for (std::size_t r = 0; r < ref.size(); ++r) {
        if (!used[r] && ref[r] == cand[i]) {
          pick = static_cast<int>(r);
          break;
        }
      }
    }
    if (pick < 0) continue;
    used[static_cast<std::size_t>(pick)] = 1;
    if (!(prev_c == static_cast<int>(i) - 1 && prev_r == pick - 1)) ++chunks;
    prev_c = static_cast<int>(i);
    prev_r = pick;
  }
  return chunks;
}

}  // namespace

MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference) {
  MeteorAlignment a;
  a.candidate_len = static_cast<int>(candidate.size());
  a.reference_len = static_cast<int>(reference.size());
  std::map<std::string, int> cc, rc;
  for (const auto& w : candidate) ++cc[w];
  for (const auto& w : reference) ++rc[w];
  for (const auto& [w, n] : cc) {
    auto it = rc.find(w);
    if (it != rc.end()) a.matches += std::min(n, it->second);
  }
  if (a.matches == 0) return a;
  a.chunks = a.matches <= kExhaustiveMatchLimit ? ChunkSearch(candidate, reference).min_chunks()
                                                : greedy_chunks(candidate, reference);
  return a;
}

double meteor_from_alignment(const MeteorAlignment& a, const MeteorParams& params) {
  if (a.matches == 0 || a.candidate_len == 0 || a.reference_len == 0) return 0.0;
  const double m = a.matches;
  const double precision = m / a.candidate_len;
  const double recall = m / a.reference_len;
  const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double penalty = params.gamma * std::pow(a.chunks / m, params.beta);
  return fmean * (1.0 - penalty);
}

double meteor(std::string_view candidate, std::string_view reference,
              const MeteorParams& params) {
  params.validate();
  std::vector<std::string> c = tokenize(candidate);
  std::vector<std::string> r = tokenize(reference);
  if (params.stemming) {
    for (auto& w : c) w = porter_stem(w);
    for (auto& w : r) w = porter_stem(w);
  }
  return meteor_from_alignment(meteor_align(c, r), params);
}

}  // namespace openeval
