#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace openeval {

/// Classic METEOR settings. F-mean is fixed at 10PR / (R + 9P);
/// penalty = gamma * (chunks / matches)^beta.
struct MeteorParams {
  double gamma = 0.5;
  double beta = 3.0;
  bool stemming = false;

  void validate() const;
};

/// Statistics of the chosen unigram alignment.
struct MeteorAlignment {
  int candidate_len = 0;
  int reference_len = 0;
  int matches = 0;
  int chunks = 0;
};

/// Alignment with the most matches, and among those the fewest chunks.
/// Exhaustive for up to 8 matches, greedy in-order otherwise.
MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference);

/// Score from alignment statistics; 0 when nothing matches.
double meteor_from_alignment(const MeteorAlignment& a, const MeteorParams& params);

/// Tokenizes both strings, aligns (optionally on Porter stems) and scores.
double meteor(std::string_view candidate, std::string_view reference,
              const MeteorParams& params = {});

/// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
std::string porter_stem(std::string_view word);

}  // namespace openeval
