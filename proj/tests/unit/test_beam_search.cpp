#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "openeval/beam_search.hpp"
#include "openeval/errors.hpp"

namespace openeval {
namespace {

// Random tabular model with strictly positive probabilities for every prefix
// that can occur (prefixes never contain EOS).
TabularModel random_model(std::mt19937_64& rng, int vocab, int max_len, int eos) {
  TabularModel m(vocab, eos);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<TokenSequence> frontier{{}};
  for (int depth = 0; depth < max_len; ++depth) {
    std::vector<TokenSequence> next;
    for (const TokenSequence& prefix : frontier) {
      Eigen::VectorXd p(vocab);
      for (int t = 0; t < vocab; ++t) p(t) = u(rng);
      p /= p.sum();
      m.set(prefix, p);
      for (int t = 0; t < vocab; ++t) {
        if (t == eos) continue;
        TokenSequence s = prefix;
        s.push_back(t);
        next.push_back(std::move(s));
      }
    }
    frontier = std::move(next);
  }
  return m;
}

// Every complete sequence (ends in EOS or reaches max_len) with its logprob,
// best first, ties to the lexicographically smaller sequence.
std::vector<ScoredSequence> exhaustive(const DecoderModel& m, int max_len) {
  std::vector<ScoredSequence> out;
  std::function<void(TokenSequence&, double)> go = [&](TokenSequence& prefix, double lp) {
    const Eigen::VectorXd next = m.next_logprobs(prefix);
    for (int t = 0; t < m.vocab_size(); ++t) {
      prefix.push_back(t);
      const double total = lp + next(t);
      if (t == m.eos_token() || static_cast<int>(prefix.size()) == max_len) {
        out.push_back({prefix, total});
      } else {
        go(prefix, total);
      }
      prefix.pop_back();
    }
  };
  TokenSequence root;
  go(root, 0.0);
  std::sort(out.begin(), out.end(), [](const ScoredSequence& a, const ScoredSequence& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.tokens < b.tokens;
  });
  return out;
}

TokenSequence greedy(const DecoderModel& m, int max_len) {
  TokenSequence s;
  while (static_cast<int>(s.size()) < max_len) {
    const Eigen::VectorXd lp = m.next_logprobs(s);
    Eigen::Index best = 0;
    for (Eigen::Index t = 1; t < lp.size(); ++t)
      if (lp(t) > lp(best)) best = t;
    s.push_back(static_cast<int>(best));
    if (best == m.eos_token()) break;
  }
  return s;
}

int ipow(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

TEST(BeamDecode, DeterministicChain) {
  TabularModel m(3, 2);
  m.set({}, Eigen::Vector3d(1, 0, 0));
  m.set({0}, Eigen::Vector3d(0, 1, 0));
  m.set({0, 1}, Eigen::Vector3d(0, 0, 1));
  const BeamResult r = beam_decode(m, {3, 8, 0.0});
  ASSERT_EQ(r.sequences.size(), 1u);
  EXPECT_EQ(r.sequences[0].tokens, (TokenSequence{0, 1, 2}));
  EXPECT_EQ(r.sequences[0].logprob, 0.0);
}

TEST(BeamDecode, TwoStepModelMatchesEnumeration) {
  // V = 3, EOS = 2, max_len 2: the 9 two-token paths collapse into 7
  // complete sequences ([2] plus 6 of length 2).
  TabularModel m(3, 2);
  m.set({}, Eigen::Vector3d(0.5, 0.3, 0.2));
  m.set({0}, Eigen::Vector3d(0.1, 0.6, 0.3));
  m.set({1}, Eigen::Vector3d(0.7, 0.2, 0.1));
  const BeamResult r = beam_decode(m, {3, 2, 0.0});
  const auto all = exhaustive(m, 2);
  ASSERT_EQ(r.sequences.size(), 3u);
  // Hand ranking: [0,1] 0.30, [0,2] 0.15, [1,0] 0.21 and [2] 0.20.
  EXPECT_EQ(r.sequences[0].tokens, (TokenSequence{0, 1}));
  EXPECT_EQ(r.sequences[1].tokens, (TokenSequence{1, 0}));
  EXPECT_EQ(r.sequences[2].tokens, (TokenSequence{2}));
  for (int k = 0; k < 3; ++k) EXPECT_EQ(r.sequences[k], all[k]);
}

TEST(BeamDecode, ValidationAndContracts) {
  TabularModel m(2, 1);
  m.set({}, Eigen::Vector2d(0.5, 0.5));
  EXPECT_THROW(beam_decode(m, {0, 3, 0}), ValidationError);
  EXPECT_THROW(beam_decode(m, {1, 0, 0}), ValidationError);
  EXPECT_THROW(beam_decode(m, {1, 3, 0}), ContractError);  // prefix [0] missing

  TabularModel bad(2, 1);
  bad.set({}, Eigen::Vector2d(0.5, 0.6));
  EXPECT_THROW(beam_decode(bad, {1, 1, 0}), ContractError);
}

TEST(BeamDecode, ParseTabularModel) {
  const TabularModel m = TabularModel::parse(
      R"({"vocab_size":3,"eos":2,"table":{"":[0.6,0.4,0],"0":[0,0,1],"1":[0,0,1]}})");
  const BeamResult r = beam_decode(m, {2, 4, 0});
  ASSERT_EQ(r.sequences.size(), 2u);
  EXPECT_EQ(r.sequences[0].tokens, (TokenSequence{0, 2}));
  EXPECT_NEAR(r.sequences[1].logprob, std::log(0.4), 1e-12);
  EXPECT_THROW(TabularModel::parse(R"({"vocab_size":3,"eos":5,"table":{}})"), Error);
}

TEST(BeamDecodeProperties, WideBeamEqualsExhaustiveTopK) {
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> vocab_d(2, 4), len_d(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const int vocab = vocab_d(rng), max_len = len_d(rng);
    const int eos = std::uniform_int_distribution<int>(0, vocab - 1)(rng);
    const TabularModel m = random_model(rng, vocab, max_len, eos);
    const int k = ipow(vocab, max_len);
    auto expected = exhaustive(m, max_len);
    if (static_cast<int>(expected.size()) > k) expected.resize(static_cast<std::size_t>(k));
    const BeamResult r = beam_decode(m, {k, max_len, 0.0});
    ASSERT_EQ(r.sequences, expected) << "trial " << trial;
  }
}

TEST(BeamDecodeProperties, BeamOneIsGreedy) {
  std::mt19937_64 rng(56);
  std::uniform_int_distribution<int> vocab_d(2, 4), len_d(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const int vocab = vocab_d(rng), max_len = len_d(rng);
    const int eos = std::uniform_int_distribution<int>(0, vocab - 1)(rng);
    const TabularModel m = random_model(rng, vocab, max_len, eos);
    const BeamResult r = beam_decode(m, {1, max_len, 0.0});
    ASSERT_EQ(r.sequences.size(), 1u);
    EXPECT_EQ(r.sequences[0].tokens, greedy(m, max_len));
  }
}

TEST(BeamDecodeProperties, LogprobIsSumOfStepsAndResultIsSorted) {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 100; ++trial) {
    const TabularModel m = random_model(rng, 4, 4, trial % 4);
    const BeamResult r = beam_decode(m, {1 + trial % 5, 4, 0.0});
    ASSERT_LE(r.sequences.size(), static_cast<std::size_t>(1 + trial % 5));
    for (std::size_t i = 0; i < r.sequences.size(); ++i) {
      const ScoredSequence& s = r.sequences[i];
      double sum = 0;
      TokenSequence prefix;
      for (int t : s.tokens) {
        sum += m.next_logprobs(prefix)(t);
        prefix.push_back(t);
      }
      EXPECT_NEAR(s.logprob, sum, 1e-12);
      if (i > 0) {
        EXPECT_GE(r.sequences[i - 1].logprob, s.logprob);
        EXPECT_NE(r.sequences[i - 1].tokens, s.tokens);
      }
    }
  }
}

TEST(BeamDecodeProperties, Deterministic) {
  std::mt19937_64 rng(58);
  const TabularModel m = random_model(rng, 4, 4, 3);
  const BeamResult a = beam_decode(m, {3, 4, 0.0});
  const BeamResult b = beam_decode(m, {3, 4, 0.0});
  EXPECT_EQ(a.sequences, b.sequences);
}

TEST(BeamDecode, WiderBeamCanDropTheNarrowerTopSequence) {
  // Greedy commits to token 0 (0.45) and ends at [0,0] with p 0.18. A beam of
  // two also keeps [1] (0.44), whose continuations [1,1] (0.22) and [1,2]
  // (0.2112) both beat 0.18 and fill the result, so [0,0] is gone.
  TabularModel m(3, 2);
  m.set({}, Eigen::Vector3d(0.45, 0.44, 0.11));
  m.set({0}, Eigen::Vector3d(0.4, 0.3, 0.3));
  m.set({1}, Eigen::Vector3d(0.02, 0.5, 0.48));
  const BeamResult narrow = beam_decode(m, {1, 2, 0.0});
  EXPECT_EQ(narrow.sequences.front().tokens, (TokenSequence{0, 0}));
  const BeamResult wide = beam_decode(m, {2, 2, 0.0});
  ASSERT_EQ(wide.sequences.size(), 2u);
  EXPECT_EQ(wide.sequences[0].tokens, (TokenSequence{1, 1}));
  EXPECT_EQ(wide.sequences[1].tokens, (TokenSequence{1, 2}));
  EXPECT_GT(wide.sequences[1].logprob, narrow.sequences.front().logprob);
}

TEST(BeamDecode, LengthPenaltyFavoursLongerSequences) {
  // [2] has p 0.4, [0,2] has p 0.36 and [0,0,2] has p 0.24. Raw ranking
  // prefers [2]; per token the three score -0.916, -0.511 and -0.476.
  TabularModel m(3, 2);
  m.set({}, Eigen::Vector3d(0.6, 0.0, 0.4));
  m.set({0}, Eigen::Vector3d(0.4, 0.0, 0.6));
  m.set({0, 0}, Eigen::Vector3d(0.0, 0.0, 1.0));
  EXPECT_EQ(beam_decode(m, {3, 3, 0.0}).sequences.front().tokens, (TokenSequence{2}));
  EXPECT_EQ(beam_decode(m, {3, 3, 1.0}).sequences.front().tokens, (TokenSequence{0, 0, 2}));
}

}  // namespace
}  // namespace openeval
