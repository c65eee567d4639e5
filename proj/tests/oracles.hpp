#pragma once

// Independent oracles for the property suites. These deliberately avoid the
// library's own data structures and algorithms: quadratic scans instead of
// hash counting, subsequence enumeration instead of dynamic programming, and
// a recursive enumeration of the full decode space instead of beam search.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "medsum/metrics.hpp"
#include "medsum/model.hpp"

namespace oracles {

struct TripleCounts {
  long long match = 0;
  long long cand_total = 0;
  long long ref_total = 0;
};

// Clipped n-gram matching by direct positional scans, no hashing.
inline TripleCounts brute_ngram_counts(const std::vector<std::string>& cand,
                                       const std::vector<std::string>& ref, int n) {
  auto grams = [n](const std::vector<std::string>& toks) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      out.emplace_back(toks.begin() + i, toks.begin() + i + n);
    }
    return out;
  };
  const auto cg = grams(cand);
  const auto rg = grams(ref);
  TripleCounts counts;
  counts.cand_total = static_cast<long long>(cg.size());
  counts.ref_total = static_cast<long long>(rg.size());
  // For each distinct candidate gram (first occurrence wins), add
  // min(count in cand, count in ref).
  for (std::size_t i = 0; i < cg.size(); ++i) {
    bool first = true;
    for (std::size_t j = 0; j < i; ++j) {
      if (cg[j] == cg[i]) {
        first = false;
        break;
      }
    }
    if (!first) continue;
    long long in_cand = 0, in_ref = 0;
    for (const auto& g : cg) {
      if (g == cg[i]) ++in_cand;
    }
    for (const auto& g : rg) {
      if (g == cg[i]) ++in_ref;
    }
    counts.match += std::min(in_cand, in_ref);
  }
  return counts;
}

inline medsum::MetricTriple brute_rouge_n(const std::vector<std::string>& cand,
                                          const std::vector<std::string>& ref, int n) {
  const TripleCounts c = brute_ngram_counts(cand, ref, n);
  return medsum::MetricTriple::from_counts(c.match, c.cand_total, c.ref_total);
}

// Longest common subsequence by enumerating every subsequence of the shorter
// side (bitmask) and checking it against the other side greedily.
inline long long exhaustive_lcs(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  const std::size_t n = small.size();
  long long best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::size_t j = 0;
    long long len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < large.size() && large[j] != small[i]) ++j;
      if (j == large.size()) {
        ok = false;
      } else {
        ++j;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

// Direct restatement of the early-stopping rule.
inline bool early_stop_oracle(const std::vector<medsum::real>& losses, int patience) {
  if (losses.empty()) return false;
  std::size_t best = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] < losses[best]) best = i;
  }
  return losses.size() - 1 - best > static_cast<std::size_t>(patience);
}

struct DecodeBest {
  medsum::real score = -1e300;
  medsum::TokenSequence tokens;  // BOS-wrapped
};

// Exhaustive search over the decode space: at each step any vocabulary id
// may be chosen; EOS or the length cap ends a sequence; sequences are scored
// by sequence_score (sum logprob / generated length). Only feasible for
// micro instances.
inline void enumerate_decode(const medsum::TokenSequence& source,
                             const medsum::ModelParams& params,
                             const medsum::ModelConfig& config,
                             std::vector<int>& generated, DecodeBest& best) {
  const bool at_cap = static_cast<int>(generated.size()) >= config.max_target_len;
  const bool ended = !generated.empty() && generated.back() == medsum::Vocabulary::kEos;
  if (ended || at_cap) {
    medsum::TokenSequence wrapped;
    wrapped.push_back(medsum::Vocabulary::kBos);
    wrapped.insert(wrapped.end(), generated.begin(), generated.end());
    if (!ended) wrapped.push_back(medsum::Vocabulary::kEos);
    medsum::TokenSequence scored = wrapped;
    if (!ended) scored.pop_back();  // score only the generated tokens
    if (scored.size() < 2) return;
    const medsum::real score = medsum::sequence_score(scored, source, params, config);
    if (score > best.score) {
      best.score = score;
      best.tokens = wrapped;
    }
    return;
  }
  for (int tok = 0; tok < config.vocab_size; ++tok) {
    generated.push_back(tok);
    enumerate_decode(source, params, config, generated, best);
    generated.pop_back();
  }
}

inline DecodeBest exhaustive_decode(const medsum::TokenSequence& source,
                                    const medsum::ModelParams& params,
                                    const medsum::ModelConfig& config) {
  DecodeBest best;
  std::vector<int> generated;
  enumerate_decode(source, params, config, generated, best);
  return best;
}

}  // namespace oracles
