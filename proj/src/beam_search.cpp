#include "openeval/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "openeval/errors.hpp"

namespace openeval {

TabularModel::TabularModel(int vocab_size, int eos_token) : vocab_size_(vocab_size), eos_(eos_token) {
  if (vocab_size < 1) throw ValidationError("vocab_size must be positive");
  if (eos_token < 0 || eos_token >= vocab_size) throw ValidationError("eos token out of range");
}

void TabularModel::set(const TokenSequence& prefix, const Eigen::VectorXd& probs) {
  if (probs.size() != vocab_size_) throw ValidationError("distribution size != vocab_size");
  table_[prefix] = probs.array().log().matrix();
}

Eigen::VectorXd TabularModel::next_logprobs(std::span<const int> prefix) const {
  auto it = table_.find(TokenSequence(prefix.begin(), prefix.end()));
  if (it == table_.end()) {
    std::string key;
    for (int t : prefix) key += (key.empty() ? "" : " ") + std::to_string(t);
    throw ContractError(fmt::format("tabular model has no entry for prefix '{}'", key));
  }
  return it->second;
}

TabularModel TabularModel::parse(std::string_view document) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("beam model: malformed JSON: {}", e.what()), 0);
  }
  if (!doc.is_object() || !doc.contains("vocab_size") || !doc.contains("eos") ||
      !doc.contains("table") || !doc["table"].is_object() ||
      !doc["vocab_size"].is_number_integer() || !doc["eos"].is_number_integer()) {
    throw ParseError("beam model: expected {\"vocab_size\":int,\"eos\":int,\"table\":{...}}", 0);
  }
  TabularModel model(doc["vocab_size"].get<int>(), doc["eos"].get<int>());
  for (auto it = doc["table"].begin(); it != doc["table"].end(); ++it) {
    TokenSequence prefix;
    std::istringstream ks(it.key());
    std::string tok;
    while (ks >> tok) {
      try {
        std::size_t used = 0;
        prefix.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(fmt::format("beam model: bad prefix key '{}'", it.key()), 0);
      }
    }
    const json& v = it.value();
    if (!v.is_array()) throw ParseError(fmt::format("beam model: entry '{}' must be an array", it.key()), 0);
    Eigen::VectorXd p(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ParseError("beam model: probabilities must be numbers", 0);
      p(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    model.set(prefix, p);
  }
  return model;
}

namespace {

struct Beam {
  TokenSequence tokens;
  double logprob = 0.0;
  double rank = 0.0;
};

bool better(const Beam& a, const Beam& b) {
  if (a.rank != b.rank) return a.rank > b.rank;
  return a.tokens < b.tokens;
}

double rank_of(double logprob, std::size_t len, double penalty) {
  if (penalty == 0.0) return logprob;
  return logprob / std::pow(static_cast<double>(len), penalty);
}

void check_distribution(const Eigen::VectorXd& lp, int vocab, const TokenSequence& prefix) {
  if (lp.size() != vocab) {
    throw ContractError(fmt::format("model returned {} log-probabilities for vocab size {}",
                                    lp.size(), vocab));
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    if (std::isnan(lp(i)) || lp(i) == std::numeric_limits<double>::infinity()) {
      throw ContractError("model returned a non-finite log-probability");
    }
    total += std::exp(lp(i));
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ContractError(fmt::format("model distribution after {} tokens sums to {}",
                                    prefix.size(), total));
  }
}

}  // namespace

BeamResult beam_decode(const DecoderModel& model, const BeamOptions& options) {
  if (options.beam_size < 1) throw ValidationError("beam_size must be >= 1");
  if (options.max_len < 1) throw ValidationError("max_len must be >= 1");
  if (!(options.length_penalty >= 0.0)) throw ValidationError("length_penalty must be >= 0");
  const int vocab = model.vocab_size();
  const int eos = model.eos_token();
  const auto width = static_cast<std::size_t>(options.beam_size);

  std::vector<Beam> live{Beam{}};
  std::vector<Beam> pool;
  for (int step = 0; step < options.max_len && !live.empty(); ++step) {
    std::vector<Beam> expansions;
    expansions.reserve(live.size() * static_cast<std::size_t>(vocab));
    for (const Beam& b : live) {
      const Eigen::VectorXd lp = model.next_logprobs(b.tokens);
      check_distribution(lp, vocab, b.tokens);
      for (int t = 0; t < vocab; ++t) {
        if (lp(t) == -std::numeric_limits<double>::infinity()) continue;
        Beam e{b.tokens, b.logprob + lp(t), 0.0};
        e.tokens.push_back(t);
        e.rank = rank_of(e.logprob, e.tokens.size(), options.length_penalty);
        expansions.push_back(std::move(e));
      }
    }
    const std::size_t keep = std::min(width, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), better);
    expansions.resize(keep);

    live.clear();
    for (Beam& e : expansions) {
      const bool done = e.tokens.back() == eos || static_cast<int>(e.tokens.size()) == options.max_len;
      (done ? pool : live).push_back(std::move(e));
    }
    std::sort(pool.begin(), pool.end(), better);
    if (pool.size() > width) pool.resize(width);

    // Extensions only lower the raw logprob, so a full pool whose worst entry
    // beats every live beam is final.
    if (options.length_penalty == 0.0 && pool.size() == width && !live.empty() &&
        live.front().rank < pool.back().rank) {
      break;
    }
  }

  BeamResult result;
  for (Beam& b : pool) result.sequences.push_back({std::move(b.tokens), b.logprob});
  return result;
}

}  // namespace openeval
