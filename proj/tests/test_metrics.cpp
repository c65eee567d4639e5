#include <cmath>

#include "doctest.h"

#include "medsum/metrics.hpp"
#include "medsum/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace medsum;

namespace {

std::vector<std::string> random_tokens(Lcg64& rng, int max_len, int alphabet) {
  static const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  const int len = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len + 1)));
  std::vector<std::string> toks;
  for (int i = 0; i < len; ++i) {
    toks.push_back(pool[rng.below(static_cast<std::uint64_t>(alphabet))]);
  }
  return toks;
}

bool triple_eq(const MetricTriple& a, const MetricTriple& b) {
  return a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1;
}

}  // namespace

TEST_CASE("rouge_n examples") {
  SUBCASE("identical sequences") {
    const std::vector<std::string> t = {"a", "b", "c"};
    for (int n : {1, 2, 3}) {
      const auto m = rouge_n(t, t, n);
      CHECK(m.precision == 1.0);
      CHECK(m.recall == 1.0);
      CHECK(m.f1 == 1.0);
    }
  }
  SUBCASE("half overlap") {
    const auto m = rouge_n({"a", "b"}, {"b", "c"}, 1);
    CHECK(m.precision == 0.5);
    CHECK(m.recall == 0.5);
    CHECK(m.f1 == 0.5);
  }
  SUBCASE("clipping") {
    const auto m = rouge_n({"a", "a", "a"}, {"a"}, 1);
    CHECK(m.precision == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("empty sides are zeros") {
    const auto m = rouge_n({}, {"a"}, 1);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    const auto m2 = rouge_n({"a"}, {"a"}, 2);  // no bigrams on either side
    CHECK(m2.f1 == 0.0);
  }
}

TEST_CASE("rouge_l examples") {
  SUBCASE("swap in the middle") {
    const auto m = rouge_l({"a", "b", "c", "d"}, {"a", "c", "b", "d"});
    CHECK(m.precision == 0.75);
    CHECK(m.recall == 0.75);
    CHECK(m.f1 == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("identical") {
    const auto m = rouge_l({"x", "y"}, {"x", "y"});
    CHECK(triple_eq(m, MetricTriple{1, 1, 1}));
  }
  SUBCASE("disjoint") {
    const auto m = rouge_l({"x"}, {"y"});
    CHECK(triple_eq(m, MetricTriple{0, 0, 0}));
  }
}

TEST_CASE("recall_metric examples") {
  const std::unordered_set<std::string> stop = {"the", "a"};
  SUBCASE("full coverage") {
    CHECK(recall_metric({"x", "y", "z"}, {"the", "x", "y"}, stop) == 1.0);
  }
  SUBCASE("half coverage") {
    CHECK(recall_metric({"x"}, {"x", "y"}, stop) == 0.5);
  }
  SUBCASE("all-stopword reference") {
    CHECK(recall_metric({"x"}, {"the", "a"}, stop) == 0.0);
  }
}

TEST_CASE("oracle equivalence on 1000 random short pairs") {
  Lcg64 rng(2024);
  int nonzero = 0;
  for (int it = 0; it < 1000; ++it) {
    const auto cand = random_tokens(rng, 12, 5);
    const auto ref = random_tokens(rng, 12, 5);
    for (int n : {1, 2}) {
      const MetricTriple fast = rouge_n(cand, ref, n);
      const MetricTriple brute = oracles::brute_rouge_n(cand, ref, n);
      REQUIRE(triple_eq(fast, brute));
      if (fast.f1 > 0) ++nonzero;
    }
  }
  CHECK(nonzero > 100);  // the sample actually exercises matches
}

TEST_CASE("rouge_l matches exhaustive subsequence search") {
  Lcg64 rng(515);
  for (int it = 0; it < 1000; ++it) {
    const auto cand = random_tokens(rng, 10, 4);
    const auto ref = random_tokens(rng, 10, 4);
    const auto m = rouge_l(cand, ref);
    const long long lcs = oracles::exhaustive_lcs(cand, ref);
    const auto expected = MetricTriple::from_counts(
        lcs, static_cast<long long>(cand.size()), static_cast<long long>(ref.size()));
    REQUIRE(triple_eq(m, expected));
  }
}

TEST_CASE("metric properties") {
  Lcg64 rng(99);
  SUBCASE("range and symmetric swap") {
    for (int it = 0; it < 300; ++it) {
      const auto cand = random_tokens(rng, 10, 4);
      const auto ref = random_tokens(rng, 10, 4);
      for (int n : {1, 2}) {
        const auto ab = rouge_n(cand, ref, n);
        const auto ba = rouge_n(ref, cand, n);
        for (double v : {ab.precision, ab.recall, ab.f1}) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
        CHECK(ab.precision == ba.recall);
        CHECK(ab.recall == ba.precision);
        CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-12));
      }
      const auto lab = rouge_l(cand, ref);
      const auto lba = rouge_l(ref, cand);
      CHECK(lab.precision == lba.recall);
      CHECK(lab.recall == lba.precision);
    }
  }
  SUBCASE("appending a matching token never lowers rouge_n recall") {
    for (int it = 0; it < 200; ++it) {
      auto cand = random_tokens(rng, 8, 3);
      const auto ref = random_tokens(rng, 8, 3);
      if (ref.empty()) continue;
      const double before = rouge_n(cand, ref, 1).recall;
      cand.push_back(ref[rng.below(ref.size())]);
      const double after = rouge_n(cand, ref, 1).recall;
      CHECK(after >= before - 1e-15);
    }
  }
  SUBCASE("LCS length is at least the longest common contiguous bigram chain") {
    const std::vector<std::string> cand = {"a", "b", "c", "x", "y"};
    const std::vector<std::string> ref = {"z", "a", "b", "c", "w"};
    const auto l = rouge_l(cand, ref);
    // "a b c" is a common contiguous run of length 3.
    CHECK(l.recall * ref.size() >= 3.0 - 1e-12);
  }
}

TEST_CASE("trigram repetition rate") {
  CHECK(trigram_repetition_rate(std::vector<int>{1, 2, 3}) == 0.0);
  CHECK(trigram_repetition_rate(std::vector<int>{1, 2, 3, 4, 5, 6}) == 0.0);
  // 1 2 3 1 2 3: trigrams (123)(231)(312)(123): one repeat out of four.
  CHECK(trigram_repetition_rate(std::vector<int>{1, 2, 3, 1, 2, 3}) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(trigram_repetition_rate(std::vector<int>{7, 7, 7, 7, 7}) ==
        doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("evaluate_corpus") {
  const auto corpus = testutil::tiny_corpus();
  const std::unordered_set<std::string> stop = {"the", "in", "and", "of"};

  SUBCASE("identity decoder scores all ones") {
    const auto eval = evaluate_corpus(
        [](const DocumentRecord& rec) { return rec.reference; }, corpus, stop);
    CHECK(eval.report.pair_count == static_cast<int>(corpus.size()));
    CHECK(eval.report.rouge1.f1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval.report.rouge2.f1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval.report.rougeL.f1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval.report.recall == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("empty decoder scores zeros") {
    const auto eval =
        evaluate_corpus([](const DocumentRecord&) { return std::string{}; }, corpus, stop);
    CHECK(eval.report.rouge1.f1 == 0.0);
    CHECK(eval.report.rougeL.f1 == 0.0);
    CHECK(eval.report.recall == 0.0);
  }
  SUBCASE("two-pair corpus mean is the average of hand-computed pairs") {
    std::vector<DocumentRecord> two = {
        {"p1", "t", "s", "a b"},
        {"p2", "t", "s", "c d"},
    };
    // Decoder emits "a b" always: pair 1 scores rouge1 f1=1, pair 2 scores 0.
    const auto eval = evaluate_corpus(
        [](const DocumentRecord&) { return std::string("a b"); }, two, {});
    CHECK(eval.report.rouge1.f1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eval.per_pair.size() == 2);
  }
  SUBCASE("decode failures are recorded and excluded") {
    int calls = 0;
    const auto eval = evaluate_corpus(
        [&calls](const DocumentRecord& rec) -> std::string {
          if (++calls == 2) throw DataError("synthetic decode failure");
          return rec.reference;
        },
        corpus, stop);
    CHECK(eval.failures.size() == 1);
    CHECK(eval.report.pair_count == static_cast<int>(corpus.size()) - 1);
    CHECK(eval.report.rouge1.f1 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("empty test set rejected") {
    CHECK_THROWS_AS(
        evaluate_corpus([](const DocumentRecord&) { return std::string{}; }, {}, stop),
        EmptyBatch);
  }
}
