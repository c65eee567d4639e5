#include "medsum/text_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "medsum/rng.hpp"

namespace medsum {

namespace {

const char* kSpecialTokens[] = {"<pad>", "<unk>", "<bos>", "<eos>"};

bool is_kept_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case ';':
    case ':':
    case '!':
    case '?':
    case '(':
    case ')':
    case '-':
    case '%':
      return true;
    default:
      return false;
  }
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

Vocabulary Vocabulary::with_specials() {
  Vocabulary v;
  for (const char* s : kSpecialTokens) v.append(s);
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw IdOutOfRange("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                       std::to_string(size()));
  }
  return tokens[static_cast<std::size_t>(id)];
}

void Vocabulary::append(const std::string& token) {
  index.emplace(token, size());
  tokens.push_back(token);
}

std::string clean_text(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_ascii_space(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    char k = c;
    if (k >= 'A' && k <= 'Z') k = static_cast<char>(k - 'A' + 'a');
    if (!is_ascii_alnum(k) && !is_kept_punct(k)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(k);
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& cleaned) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&]() {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char c : cleaned) {
    if (is_ascii_space(c)) {
      flush();
    } else if (is_kept_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const std::unordered_set<std::string>& stoplist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (stoplist.find(t) == stoplist.end()) out.push_back(t);
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists,
                            int min_freq, int max_size) {
  if (min_freq < 1) throw DataError("build_vocabulary: min_freq must be >= 1");
  if (max_size < 4) throw DataError("build_vocabulary: max_size must be at least 4");
  // std::map keeps the lexicographic tiebreak deterministic.
  std::map<std::string, long long> freq;
  long long total = 0;
  for (const auto& list : token_lists) {
    for (const auto& t : list) {
      ++freq[t];
      ++total;
    }
  }
  if (total == 0) throw EmptyCorpus("build_vocabulary: corpus has no tokens after preprocessing");

  std::vector<std::pair<std::string, long long>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab = Vocabulary::with_specials();
  for (const auto& [token, count] : entries) {
    if (vocab.size() >= max_size) break;
    if (count < min_freq) continue;
    vocab.append(token);
  }
  return vocab;
}

Vocabulary build_vocabulary(const std::vector<DocumentRecord>& corpus, int min_freq,
                            int max_size) {
  std::vector<std::vector<std::string>> lists;
  lists.reserve(corpus.size() * 2);
  for (const auto& rec : corpus) {
    lists.push_back(tokenize(clean_text(rec.source)));
    lists.push_back(tokenize(clean_text(rec.reference)));
  }
  return build_vocabulary(lists, min_freq, max_size);
}

Vocabulary extend_vocabulary(Vocabulary vocab, const std::vector<std::string>& terms) {
  for (const auto& term : terms) {
    if (!vocab.contains(term)) vocab.append(term);
    vocab.domain_terms.insert(term);
  }
  return vocab;
}

TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                     bool as_target) {
  TokenSequence seq;
  seq.reserve(tokens.size() + 2);
  if (as_target) seq.push_back(Vocabulary::kBos);
  for (const auto& t : tokens) seq.push_back(vocab.id_of(t));
  if (as_target) seq.push_back(Vocabulary::kEos);
  return seq;
}

std::vector<std::string> decode_tokens(const TokenSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (int id : seq) {
    const std::string& token = vocab.token_of(id);
    if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
    out.push_back(token);
  }
  return out;
}

std::string decode_ids(const TokenSequence& seq, const Vocabulary& vocab) {
  const std::vector<std::string> toks = decode_tokens(seq, vocab);
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

std::vector<DocumentRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file \"" + path + "\"", 0);
  std::vector<DocumentRecord> records;
  std::unordered_map<std::string, int> seen;  // id -> first line
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line) {
      if (!is_ascii_space(c)) {
        blank = false;
        break;
      }
    }
    if (blank) continue;

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw ParseError("not a JSON object", line_no);
    }
    auto get_string = [&](const char* key, bool required) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end()) {
        if (required) throw MissingField(key, line_no);
        return "";
      }
      if (!it->is_string()) throw ParseError(std::string("field \"") + key + "\" must be a string", line_no);
      return it->get<std::string>();
    };

    DocumentRecord rec;
    rec.id = get_string("id", true);
    rec.title = get_string("title", true);
    rec.reference = get_string("reference", true);
    const std::string body = get_string("body", false);
    rec.source = body.empty() ? rec.title : body;
    if (rec.id.empty()) throw MissingField("id", line_no);
    if (rec.reference.empty()) throw MissingField("reference", line_no);

    auto [it, inserted] = seen.emplace(rec.id, line_no);
    if (!inserted) throw DuplicateId(rec.id, it->second, line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::string> load_token_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open token file \"" + path + "\"", 0);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t a = 0, b = line.size();
    while (a < b && is_ascii_space(line[a])) ++a;
    while (b > a && is_ascii_space(line[b - 1])) --b;
    if (b > a) out.push_back(line.substr(a, b - a));
  }
  return out;
}

DatasetSplits split_dataset(const std::vector<DocumentRecord>& records,
                            const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test <= 0.0 ||
      std::fabs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw BadRatios("split ratios must be positive and sum to 1");
  }
  std::vector<DocumentRecord> shuffled = records;
  Lcg64 rng(seed);
  rng.shuffle(shuffled);

  const std::size_t n = shuffled.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(n * ratios.train));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(n * ratios.val));

  DatasetSplits splits;
  splits.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  splits.val.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  splits.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return splits;
}

std::vector<FoldPair> make_folds(const std::vector<DocumentRecord>& records, int k,
                                 std::uint64_t seed) {
  const int n = static_cast<int>(records.size());
  if (k < 2) throw TooFewRecords("make_folds: k must be >= 2");
  if (n < k) {
    throw TooFewRecords("make_folds: need at least " + std::to_string(k) + " records, got " +
                        std::to_string(n));
  }
  std::vector<DocumentRecord> shuffled = records;
  Lcg64 rng(seed);
  rng.shuffle(shuffled);

  const int base = n / k;
  const int extra = n % k;  // first `extra` chunks get one more
  std::vector<FoldPair> folds;
  folds.reserve(static_cast<std::size_t>(k));
  int start = 0;
  for (int i = 0; i < k; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    FoldPair fold;
    fold.validation.assign(shuffled.begin() + start, shuffled.begin() + start + len);
    fold.train.assign(shuffled.begin(), shuffled.begin() + start);
    fold.train.insert(fold.train.end(), shuffled.begin() + start + len, shuffled.end());
    folds.push_back(std::move(fold));
    start += len;
  }
  return folds;
}

std::vector<std::string> source_tokens(const DocumentRecord& record,
                                       const std::unordered_set<std::string>& stoplist) {
  std::vector<std::string> toks = tokenize(clean_text(record.source));
  if (!stoplist.empty()) toks = remove_stopwords(toks, stoplist);
  return toks;
}

std::vector<std::string> reference_tokens(const DocumentRecord& record) {
  return tokenize(clean_text(record.reference));
}

}  // namespace medsum
