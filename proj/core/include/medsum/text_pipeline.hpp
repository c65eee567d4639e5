#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "medsum/errors.hpp"

namespace medsum {

// One corpus entry. `source` is the text to summarize (body when present,
// title otherwise); `reference` is the gold summary (the abstract).
struct DocumentRecord {
  std::string id;
  std::string title;
  std::string source;
  std::string reference;
};

using TokenSequence = std::vector<int>;

// Bidirectional token<->id map. Ids are contiguous from 0 and the four
// reserved ids always occupy 0..3.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;
  std::unordered_set<std::string> domain_terms;

  static Vocabulary with_specials();

  int size() const { return static_cast<int>(tokens.size()); }
  bool contains(const std::string& token) const { return index.count(token) > 0; }
  // UNK for unknown tokens.
  int id_of(const std::string& token) const;
  const std::string& token_of(int id) const;  // IdOutOfRange
  void append(const std::string& token);
};

// Lowercases, drops every character outside {letters, digits, whitespace,
// .,;:!?()-%} (multi-byte UTF-8 characters fall outside the kept set and are
// removed), collapses whitespace runs to single spaces and trims.
std::string clean_text(const std::string& raw);

// Whitespace split with kept-set punctuation detached as single-character
// tokens. Expects cleaned input; never produces empty tokens.
std::vector<std::string> tokenize(const std::string& cleaned);

// Order-preserving filter.
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const std::unordered_set<std::string>& stoplist);

// Frequency-counted vocabulary: specials first, then tokens with frequency
// >= min_freq ordered by (frequency desc, token asc), truncated to max_size
// entries including the specials. Counts tokens of each record's source and
// reference after clean_text + tokenize.
Vocabulary build_vocabulary(const std::vector<DocumentRecord>& corpus, int min_freq,
                            int max_size);
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists,
                            int min_freq, int max_size);

// Appends absent terms in input order with fresh ids; existing ids never
// change. All given terms join the domain_terms set. Idempotent.
Vocabulary extend_vocabulary(Vocabulary vocab, const std::vector<std::string>& terms);

TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                     bool as_target);

// Drops PAD/BOS/EOS and joins the remaining tokens with single spaces.
std::string decode_ids(const TokenSequence& seq, const Vocabulary& vocab);
// Same, returning the token list instead of the joined string.
std::vector<std::string> decode_tokens(const TokenSequence& seq, const Vocabulary& vocab);

// JSONL corpus: one object per line with required string keys "id", "title",
// "reference" and optional "body"; unknown keys ignored, blank lines skipped.
std::vector<DocumentRecord> load_corpus(const std::string& path);

// One token per line, '#' starts a comment, blank lines skipped.
std::vector<std::string> load_token_file(const std::string& path);

struct SplitRatios {
  double train;
  double val;
  double test;
};

struct DatasetSplits {
  std::vector<DocumentRecord> train;
  std::vector<DocumentRecord> val;
  std::vector<DocumentRecord> test;
};

// Deterministic shuffle (Lcg64 Fisher-Yates under `seed`), then sizes
// floor(n*train), floor(n*val), remainder.
DatasetSplits split_dataset(const std::vector<DocumentRecord>& records,
                            const SplitRatios& ratios, std::uint64_t seed);

struct FoldPair {
  std::vector<DocumentRecord> train;
  std::vector<DocumentRecord> validation;
};

// Deterministic shuffle, then fold i's validation set is the i-th contiguous
// chunk; chunk sizes differ by at most one (larger chunks first).
std::vector<FoldPair> make_folds(const std::vector<DocumentRecord>& records, int k,
                                 std::uint64_t seed);

// source -> clean -> tokenize -> optional stopword filter; reference ->
// clean -> tokenize. The stoplist applies to the source side only.
std::vector<std::string> source_tokens(const DocumentRecord& record,
                                       const std::unordered_set<std::string>& stoplist);
std::vector<std::string> reference_tokens(const DocumentRecord& record);

}  // namespace medsum
