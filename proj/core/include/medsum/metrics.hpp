#pragma once

#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "medsum/text_pipeline.hpp"

namespace medsum {

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static MetricTriple from_counts(long long match, long long cand_total, long long ref_total);
};

// Clipped n-gram overlap: match = sum_g min(count_cand(g), count_ref(g)).
MetricTriple rouge_n(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference, int n);

// Longest common subsequence overlap.
MetricTriple rouge_l(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference);

// Content-unigram recall: stopwords are dropped from both sides, then
// clipped unigram matches are divided by the reference content count.
// An all-stopword reference scores 0.
double recall_metric(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference,
                     const std::unordered_set<std::string>& stoplist);

// Fraction of trigram positions whose trigram already occurred earlier in
// the same sequence. 0 for sequences shorter than 4 tokens.
double trigram_repetition_rate(const std::vector<int>& tokens);
double trigram_repetition_rate(const std::vector<std::string>& tokens);

struct PairScore {
  std::string id;
  MetricTriple rouge1;
  MetricTriple rouge2;
  MetricTriple rougeL;
  double recall = 0.0;
};

// Corpus values are unweighted arithmetic means of the per-pair values.
struct RougeReport {
  MetricTriple rouge1;
  MetricTriple rouge2;
  MetricTriple rougeL;
  double recall = 0.0;
  int pair_count = 0;
};

struct CorpusEval {
  RougeReport report;
  std::vector<PairScore> per_pair;
  std::vector<std::pair<std::string, std::string>> failures;  // (id, error)
};

using SummarizeFn = std::function<std::string(const DocumentRecord&)>;

// Decodes every record with `decoder`, tokenizes candidate and reference
// through the same clean_text + tokenize pipeline and averages the per-pair
// metrics. Per-document failures are recorded and excluded from the means.
CorpusEval evaluate_corpus(const SummarizeFn& decoder,
                           const std::vector<DocumentRecord>& test_set,
                           const std::unordered_set<std::string>& stoplist);

}  // namespace medsum
