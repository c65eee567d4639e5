#include "medsum/metrics.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace medsum {

namespace {

// n-gram multiset as joined strings; '\x1f' cannot occur in pipeline tokens.
std::map<std::string, long long> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<std::string, long long> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

long long clipped_matches(const std::map<std::string, long long>& cand,
                          const std::map<std::string, long long>& ref) {
  long long match = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) match += std::min(count, it->second);
  }
  return match;
}

}  // namespace

MetricTriple MetricTriple::from_counts(long long match, long long cand_total,
                                       long long ref_total) {
  MetricTriple m;
  m.precision = cand_total > 0 ? static_cast<double>(match) / cand_total : 0.0;
  m.recall = ref_total > 0 ? static_cast<double>(match) / ref_total : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

MetricTriple rouge_n(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference, int n) {
  if (n < 1) throw DataError("rouge_n: n must be >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  long long cand_total = 0, ref_total = 0;
  for (const auto& [_, c] : cand) cand_total += c;
  for (const auto& [_, c] : ref) ref_total += c;
  return MetricTriple::from_counts(clipped_matches(cand, ref), cand_total, ref_total);
}

MetricTriple rouge_l(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference) {
  const std::size_t m = candidate.size(), n = reference.size();
  if (m == 0 || n == 0) return MetricTriple{};
  // Two-row LCS dynamic program.
  std::vector<long long> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (candidate[i - 1] == reference[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const long long lcs = prev[n];
  return MetricTriple::from_counts(lcs, static_cast<long long>(m), static_cast<long long>(n));
}

double recall_metric(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference,
                     const std::unordered_set<std::string>& stoplist) {
  const auto cand = ngram_counts(remove_stopwords(candidate, stoplist), 1);
  const auto ref = ngram_counts(remove_stopwords(reference, stoplist), 1);
  long long ref_total = 0;
  for (const auto& [_, c] : ref) ref_total += c;
  if (ref_total == 0) return 0.0;
  return static_cast<double>(clipped_matches(cand, ref)) / ref_total;
}

namespace {

// A trigram counts as repeated if the identical trigram ended earlier in the
// same sequence.
template <class T>
double trigram_repetition_rate_impl(const std::vector<T>& tokens) {
  if (tokens.size() < 4) return 0.0;
  std::vector<std::array<T, 3>> seen;
  long long repeated = 0, total = 0;
  for (std::size_t t = 2; t < tokens.size(); ++t) {
    std::array<T, 3> tri{tokens[t - 2], tokens[t - 1], tokens[t]};
    if (std::find(seen.begin(), seen.end(), tri) != seen.end()) ++repeated;
    ++total;
    seen.push_back(tri);
  }
  return total > 0 ? static_cast<double>(repeated) / total : 0.0;
}

}  // namespace

double trigram_repetition_rate(const std::vector<int>& tokens) {
  return trigram_repetition_rate_impl(tokens);
}

double trigram_repetition_rate(const std::vector<std::string>& tokens) {
  return trigram_repetition_rate_impl(tokens);
}

CorpusEval evaluate_corpus(const SummarizeFn& decoder,
                           const std::vector<DocumentRecord>& test_set,
                           const std::unordered_set<std::string>& stoplist) {
  if (test_set.empty()) throw EmptyBatch("evaluate_corpus: test set is empty");
  CorpusEval eval;
  for (const auto& rec : test_set) {
    std::string summary;
    try {
      summary = decoder(rec);
    } catch (const MedsumError& e) {
      eval.failures.emplace_back(rec.id, e.what());
      continue;
    }
    const auto cand = tokenize(clean_text(summary));
    const auto ref = tokenize(clean_text(rec.reference));
    PairScore score;
    score.id = rec.id;
    score.rouge1 = rouge_n(cand, ref, 1);
    score.rouge2 = rouge_n(cand, ref, 2);
    score.rougeL = rouge_l(cand, ref);
    score.recall = recall_metric(cand, ref, stoplist);
    eval.per_pair.push_back(std::move(score));
  }

  auto& rep = eval.report;
  rep.pair_count = static_cast<int>(eval.per_pair.size());
  if (rep.pair_count == 0) return eval;
  auto accumulate = [](MetricTriple& dst, const MetricTriple& src) {
    dst.precision += src.precision;
    dst.recall += src.recall;
    dst.f1 += src.f1;
  };
  for (const auto& s : eval.per_pair) {
    accumulate(rep.rouge1, s.rouge1);
    accumulate(rep.rouge2, s.rouge2);
    accumulate(rep.rougeL, s.rougeL);
    rep.recall += s.recall;
  }
  const double inv = 1.0 / rep.pair_count;
  for (MetricTriple* t : {&rep.rouge1, &rep.rouge2, &rep.rougeL}) {
    t->precision *= inv;
    t->recall *= inv;
    t->f1 *= inv;
  }
  rep.recall *= inv;
  return eval;
}

}  // namespace medsum
