#include "medsum/synthetic.hpp"

#include "medsum/rng.hpp"

namespace medsum {

namespace {

const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "gene",    "cell",    "trial",   "dose",   "serum",  "tumor",
      "lesion",  "biopsy",  "assay",   "cohort", "plasma", "kinase",
      "vector",  "antigen", "enzyme",  "protein", "tissue", "marker",
      "strain",  "sample",  "vessel",  "nerve",  "spine",  "joint"};
  return pool;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

std::vector<DocumentRecord> make_copy_corpus(int n_docs, int src_len, int ref_len,
                                             std::uint64_t seed) {
  if (src_len < ref_len + 1) {
    throw DataError("make_copy_corpus: src_len must exceed ref_len");
  }
  const auto& pool = word_pool();
  Lcg64 rng(seed);
  std::vector<DocumentRecord> records;
  records.reserve(static_cast<std::size_t>(n_docs));
  for (int d = 0; d < n_docs; ++d) {
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(src_len));
    for (int i = 0; i < src_len; ++i) {
      words.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
    }
    // The marker lands at a random position; the reference is the span right
    // after it. Recovering it requires locating the marker in the source.
    const int marker_at =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(src_len - ref_len)));
    words[static_cast<std::size_t>(marker_at)] = "focus";
    DocumentRecord rec;
    rec.id = "copy" + std::to_string(d + 1);
    rec.source = join(words);
    rec.title = rec.source;
    rec.reference = join({words.begin() + marker_at + 1,
                          words.begin() + marker_at + 1 + std::min(ref_len, src_len)});
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<DocumentRecord> make_repetition_corpus(int n_docs, std::uint64_t seed) {
  const auto& pool = word_pool();
  Lcg64 rng(seed);
  std::vector<DocumentRecord> records;
  records.reserve(static_cast<std::size_t>(n_docs));
  for (int d = 0; d < n_docs; ++d) {
    // A two-word phrase repeated several times is the shortest pattern that
    // trains the decoder into a trigram loop.
    const std::string a = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    const std::string b = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    const int repeats = 3 + static_cast<int>(rng.below(2));
    std::vector<std::string> ref_words;
    for (int r = 0; r < repeats; ++r) {
      ref_words.push_back(a);
      ref_words.push_back(b);
    }
    DocumentRecord rec;
    rec.id = "rep" + std::to_string(d + 1);
    rec.source = a + " " + b + " " +
                 pool[static_cast<std::size_t>(rng.below(pool.size()))];
    rec.title = rec.source;
    rec.reference = join(ref_words);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace medsum
