#include <cmath>
#include <vector>

#include "doctest.h"

#include "medsum/grad_check.hpp"
#include "medsum/rng.hpp"
#include "medsum/tape.hpp"

using namespace medsum;

TEST_CASE("affine matches hand computations") {
  Tape tape;
  SUBCASE("identity") {
    auto w = make_tensor({2, 2}, {1, 0, 0, 1});
    auto x = make_vector({3, 4});
    auto b = make_vector({0, 0});
    auto y = tape.affine(w, x, b);
    CHECK(y->values == std::vector<real>{3, 4});
  }
  SUBCASE("hand matmul") {
    auto w = make_tensor({2, 2}, {1, 2, 3, 4});
    auto x = make_vector({1, 1});
    auto b = make_vector({1, 0});
    auto y = tape.affine(w, x, b);
    CHECK(y->values == std::vector<real>{4, 7});
  }
  SUBCASE("zero weight passes bias through") {
    auto w = make_tensor({2, 3}, std::vector<real>(6, 0.0));
    auto x = make_vector({9, 9, 9});
    auto b = make_vector({2.5, 2.5});
    auto y = tape.affine(w, x, b);
    CHECK(y->values == std::vector<real>{2.5, 2.5});
  }
  SUBCASE("shape mismatch throws") {
    auto w = make_tensor({2, 2}, {1, 0, 0, 1});
    auto x = make_vector({1, 2, 3});
    auto b = make_vector({0, 0});
    CHECK_THROWS_AS(tape.affine(w, x, b), ShapeMismatch);
  }
}

TEST_CASE("tanh_elem values and finite-difference gradient") {
  Tape tape;
  auto x = make_vector({0.0, 50.0, -50.0});
  auto y = tape.tanh_elem(x);
  CHECK(y->at(0) == 0.0);
  CHECK(y->at(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(y->at(2) == doctest::Approx(-1.0).epsilon(1e-6));

  // Gradient at 0 is 1, cross-checked with a central difference.
  auto p = make_vector({0.0});
  auto builder = [&p](Tape& t) { return t.sum(t.tanh_elem(p)); };
  const auto report = grad_check(builder, {p}, 1e-3, 42);
  CHECK(report.max_rel_error <= 1e-5);
  {
    Tape t2;
    auto out = t2.tanh_elem(p);
    t2.backward(t2.sum(out));
    CHECK(p->grad[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax examples and properties") {
  SUBCASE("uniform on constant input") {
    Tape tape;
    auto x = make_vector({7.5, 7.5, 7.5});
    auto y = tape.softmax(x);
    for (int i = 0; i < 3; ++i) CHECK(y->at(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("closed form (0, ln 3)") {
    Tape tape;
    auto x = make_vector({0.0, std::log(3.0)});
    auto y = tape.softmax(x);
    CHECK(y->at(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y->at(1) == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("sum to one and shift invariance, random lengths 1..64") {
    Lcg64 rng(7);
    for (int it = 0; it < 200; ++it) {
      const int n = 1 + static_cast<int>(rng.below(64));
      std::vector<real> vals(static_cast<std::size_t>(n));
      for (auto& v : vals) v = rng.uniform(-8.0, 8.0);
      Tape tape;
      auto x = make_vector(vals);
      auto y = tape.softmax(x);
      real total = 0.0;
      for (int i = 0; i < n; ++i) total += y->at(i);
      CHECK(std::fabs(total - 1.0) <= 1e-6);

      const real shift = rng.uniform(-5.0, 5.0);
      std::vector<real> shifted = vals;
      for (auto& v : shifted) v += shift;
      auto y2 = tape.softmax(make_vector(shifted));
      for (int i = 0; i < n; ++i) CHECK(std::fabs(y2->at(i) - y->at(i)) <= 1e-6);
    }
  }
  SUBCASE("non-finite input throws") {
    Tape tape;
    auto x = make_vector({1.0, std::nan("")});
    CHECK_THROWS_AS(tape.softmax(x), NonFinite);
  }
}

TEST_CASE("cross_entropy examples") {
  Tape tape;
  SUBCASE("certain prediction costs zero") {
    auto p = make_vector({0.0, 1.0, 0.0});
    CHECK(tape.cross_entropy(p, 1)->values[0] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("uniform over four") {
    auto p = make_vector({0.25, 0.25, 0.25, 0.25});
    CHECK(tape.cross_entropy(p, 2)->values[0] ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("clamped zero probability stays finite") {
    auto p = make_vector({1.0, 0.0});
    const real loss = tape.cross_entropy(p, 1)->values[0];
    CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
    CHECK(loss == doctest::Approx(27.631).epsilon(1e-3));
  }
  SUBCASE("target out of range") {
    auto p = make_vector({0.5, 0.5});
    CHECK_THROWS_AS(tape.cross_entropy(p, 2), TargetOutOfRange);
    CHECK_THROWS_AS(tape.cross_entropy(p, -1), TargetOutOfRange);
  }
}

TEST_CASE("backward basics") {
  SUBCASE("sum gives all-ones gradient") {
    Tape tape;
    auto x = make_vector({1.0, -2.0, 3.5});
    auto loss = tape.sum(x);
    tape.backward(loss);
    CHECK(x->grad == std::vector<real>{1, 1, 1});
  }
  SUBCASE("x squared at 3 gives 6") {
    Tape tape;
    auto x = make_vector({3.0});
    auto loss = tape.sum(tape.mul_elem(x, x));
    tape.backward(loss);
    CHECK(x->grad[0] == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("gradients accumulate across backward calls until zeroed") {
    Tape tape;
    auto x = make_vector({3.0});
    auto loss = tape.sum(tape.mul_elem(x, x));
    tape.backward(loss);
    tape.backward(loss);
    CHECK(x->grad[0] == doctest::Approx(12.0).epsilon(1e-12));
    x->zero_grad();
    tape.backward(loss);
    CHECK(x->grad[0] == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("detached tensor rejected") {
    Tape tape;
    auto x = make_scalar(1.0);
    CHECK_THROWS_AS(tape.backward(x), DetachedTensor);
  }
  SUBCASE("non-scalar loss rejected") {
    Tape tape;
    auto x = make_vector({1.0, 2.0});
    auto y = tape.scale(x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), ShapeMismatch);
  }
}

TEST_CASE("backward is linear over independent subgraphs") {
  Lcg64 rng(11);
  for (int it = 0; it < 20; ++it) {
    std::vector<real> va(4), vb(4);
    for (auto& v : va) v = rng.uniform(-2, 2);
    for (auto& v : vb) v = rng.uniform(-2, 2);

    auto a1 = make_vector(va), b1 = make_vector(vb);
    {
      Tape tape;
      auto loss = tape.add(tape.sum(tape.mul_elem(a1, a1)), tape.sum(tape.tanh_elem(b1)));
      tape.backward(loss);
    }
    auto a2 = make_vector(va), b2 = make_vector(vb);
    {
      Tape t1;
      t1.backward(t1.sum(t1.mul_elem(a2, a2)));
      Tape t2;
      t2.backward(t2.sum(t2.tanh_elem(b2)));
    }
    for (int i = 0; i < 4; ++i) {
      CHECK(a1->grad[i] == doctest::Approx(a2->grad[i]).epsilon(1e-12));
      CHECK(b1->grad[i] == doctest::Approx(b2->grad[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward+backward is bit-deterministic") {
  auto run = [](std::uint64_t seed) {
    Lcg64 rng(seed);
    std::vector<real> wv(12), xv(4);
    for (auto& v : wv) v = rng.uniform(-1, 1);
    for (auto& v : xv) v = rng.uniform(-1, 1);
    auto w = make_tensor({3, 4}, wv);
    auto x = make_vector(xv);
    auto b = make_vector({0.1, -0.2, 0.3});
    Tape tape;
    auto loss = tape.sum(tape.tanh_elem(tape.affine(w, x, b)));
    tape.backward(loss);
    return std::tuple{loss->values[0], w->grad, x->grad};
  };
  const auto [l1, wg1, xg1] = run(99);
  const auto [l2, wg2, xg2] = run(99);
  CHECK(l1 == l2);
  CHECK(wg1 == wg2);
  CHECK(xg1 == xg2);
}

TEST_CASE("NaN is caught at the first producing op") {
  Tape tape;
  auto w = make_tensor({1, 1}, {std::numeric_limits<real>::infinity()});
  auto x = make_vector({0.0});
  auto b = make_vector({0.0});
  // Inf * 0 = NaN inside affine.
  CHECK_THROWS_AS(tape.affine(w, x, b), NonFinite);
}

TEST_CASE("grad_check on closed-form functions") {
  Lcg64 rng(1234);
  SUBCASE("quadratic") {
    std::vector<real> pv(10), cv(10);
    for (auto& v : pv) v = rng.uniform(-2, 2);
    for (auto& v : cv) v = rng.uniform(0.5, 2.0);
    auto p = make_vector(pv);
    auto c = make_vector(cv);
    auto builder = [&](Tape& t) { return t.sum(t.mul_elem(c, t.mul_elem(p, p))); };
    const auto report = grad_check(builder, {p}, 1e-3, 5);
    CHECK(report.coords_checked == 10);
    CHECK(report.max_rel_error <= 1e-4);
  }
  SUBCASE("linear") {
    std::vector<real> pv(40), cv(40);
    for (auto& v : pv) v = rng.uniform(-2, 2);
    for (auto& v : cv) v = rng.uniform(-3, 3);
    auto p = make_vector(pv);
    auto c = make_vector(cv);
    auto builder = [&](Tape& t) { return t.sum(t.mul_elem(c, p)); };
    const auto report = grad_check(builder, {p}, 1e-3, 5);
    CHECK(report.coords_checked == 25);  // sampled subset of the 40
    CHECK(report.max_rel_error <= 1e-5);
  }
}

TEST_CASE("min_elem and coverage-style sums") {
  Tape tape;
  auto a = make_vector({0.9, 0.1});
  auto b = make_vector({0.2, 0.8});
  auto s = tape.sum(tape.min_elem(a, b));
  CHECK(s->values[0] == doctest::Approx(0.3).epsilon(1e-12));
  tape.backward(s);
  // Gradient follows the smaller side.
  CHECK(b->grad[0] == 1.0);
  CHECK(a->grad[1] == 1.0);
  CHECK(a->grad[0] == 0.0);
  CHECK(b->grad[1] == 0.0);
}

TEST_CASE("matmul family shapes and adjoints") {
  auto a = make_tensor({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = make_tensor({3, 2}, {1, 0, 0, 1, 1, 1});
  Tape tape;
  auto y = tape.matmul(a, b);
  CHECK(y->values == std::vector<real>{4, 5, 10, 11});

  auto builder = [&](Tape& t) { return t.sum(t.tanh_elem(t.scale(t.matmul(a, b), 0.1))); };
  const auto report = grad_check(builder, {a, b}, 1e-3, 9);
  CHECK(report.max_rel_error <= 1e-6);

  auto c = make_tensor({2, 3}, {0.2, -0.1, 0.4, 0.3, 0.1, -0.2});
  auto builder_nt = [&](Tape& t) {
    return t.sum(t.tanh_elem(t.scale(t.matmul_nt(a, c), 0.1)));
  };
  const auto report_nt = grad_check(builder_nt, {a, c}, 1e-3, 10);
  CHECK(report_nt.max_rel_error <= 1e-6);
}

TEST_CASE("kl_from_const value and gradient") {
  Tape tape;
  auto logits = make_vector({0.3, -0.7, 1.1});
  auto q = tape.softmax(logits);
  std::vector<real> p(q->values.begin(), q->values.end());
  CHECK(tape.kl_from_const(p, q)->values[0] == doctest::Approx(0.0).epsilon(1e-12));

  // Gradient checked away from the p == q stationary point.
  std::vector<real> p_other = {0.6, 0.3, 0.1};
  auto builder = [&](Tape& t) { return t.kl_from_const(p_other, t.softmax(logits)); };
  const auto report = grad_check(builder, {logits}, 1e-3, 3);
  CHECK(report.max_rel_error <= 1e-6);
}
