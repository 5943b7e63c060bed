#pragma once

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace openeval {

using TokenSequence = std::vector<int>;

/// Autoregressive next-token distribution source.
class DecoderModel {
 public:
  virtual ~DecoderModel() = default;
  virtual int vocab_size() const = 0;
  virtual int eos_token() const = 0;
  /// Log-probabilities over the vocabulary given the tokens so far.
  virtual Eigen::VectorXd next_logprobs(std::span<const int> prefix) const = 0;
};

/// Lookup-table model: one distribution per prefix.
class TabularModel final : public DecoderModel {
 public:
  TabularModel(int vocab_size, int eos_token);

  /// `probs` is a probability vector (not log) over the vocabulary.
  void set(const TokenSequence& prefix, const Eigen::VectorXd& probs);

  int vocab_size() const override { return vocab_size_; }
  int eos_token() const override { return eos_; }
  /// Throws ContractError for a prefix with no entry.
  Eigen::VectorXd next_logprobs(std::span<const int> prefix) const override;

  /// {"vocab_size":V,"eos":e,"table":{"":[p..],"0":[p..],"0 2":[p..]}};
  /// keys are space-separated token prefixes.
  static TabularModel parse(std::string_view document);

 private:
  int vocab_size_;
  int eos_;
  std::map<TokenSequence, Eigen::VectorXd> table_;
};

struct BeamOptions {
  int beam_size = 3;
  int max_len = 8;
  // Ranking uses logprob / length^length_penalty; 0 ranks by raw logprob.
  double length_penalty = 0.0;
};

struct ScoredSequence {
  TokenSequence tokens;
  double logprob = 0.0;

  friend bool operator==(const ScoredSequence&, const ScoredSequence&) = default;
};

struct BeamResult {
  std::vector<ScoredSequence> sequences;  // best first
};

/// Beam search. Each step expands every live beam over the vocabulary and
/// keeps the best `beam_size` expansions; those ending in EOS or reaching
/// max_len retire into a pool of at most `beam_size`. Ties go to the
/// lexicographically smaller sequence. Zero-probability expansions are never
/// kept. With no length penalty the search stops once the best live beam
/// cannot beat the worst retired one. Throws ContractError when the model
/// returns a malformed distribution, ValidationError for bad options.
BeamResult beam_decode(const DecoderModel& model, const BeamOptions& options);

}  // namespace openeval
