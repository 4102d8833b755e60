#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fcrx/error.hpp"
#include "fcrx/eval.hpp"

using namespace fcrx;

TEST_CASE("bleu identity, disjoint, and empty cases") {
  CHECK(bleu("the lungs are clear", "the lungs are clear") == doctest::Approx(1.0));
  CHECK(bleu("alpha beta gamma", "delta epsilon zeta") == doctest::Approx(0.0));
  CHECK(bleu("", "anything at all") == doctest::Approx(0.0));
  CHECK(bleu("one two three", "one two three", 2) == doctest::Approx(1.0));
  double v = bleu("cardiomegaly with effusion", "cardiomegaly without effusion");
  CHECK(v > 0.0);
  CHECK(v < 1.0);
}

TEST_CASE("bleu hand-computed 2-gram case") {
  // candidate "a b c d", reference "a b c e", max_n = 2.
  // p1 = 3/4.  bigrams: {ab, bc, cd} vs {ab, bc, ce} -> p2 = 2/3.
  // Equal lengths, BP = 1.  bleu = sqrt(3/4 * 2/3) = sqrt(1/2).
  double expect = std::sqrt(0.75 * (2.0 / 3.0));
  CHECK(bleu("a b c d", "a b c e", 2) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bleu smoothing and brevity penalty") {
  // Shared unigrams but no shared higher n-grams: add-one keeps it positive.
  double v = bleu("edema nodule effusion", "nodule edema consolidation");
  CHECK(v > 0.0);
  // Shorter candidate is penalized.
  double full = bleu("the lungs are clear today", "the lungs are clear today");
  double cut = bleu("the lungs are clear", "the lungs are clear today");
  CHECK(cut < full);
  // Tokenization is case- and punctuation-insensitive.
  CHECK(bleu("The lungs, are clear.", "the lungs are clear") == doctest::Approx(1.0));
}

TEST_CASE("single split honors the 70/10/20 ratios and partitions") {
  auto splits = split_dataset(10, {0.7, 0.1, 0.2}, 1, 5);
  REQUIRE(splits.size() == 1);
  CHECK(splits[0].train.size() == 7);
  CHECK(splits[0].val.size() == 1);
  CHECK(splits[0].test.size() == 2);

  std::set<int> all;
  for (int i : splits[0].train) all.insert(i);
  for (int i : splits[0].val) all.insert(i);
  for (int i : splits[0].test) all.insert(i);
  CHECK(all.size() == 10);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 9);
}

TEST_CASE("splits are seeded and deterministic") {
  auto a = split_dataset(50, {0.7, 0.1, 0.2}, 1, 9);
  auto b = split_dataset(50, {0.7, 0.1, 0.2}, 1, 9);
  CHECK(a[0].train == b[0].train);
  CHECK(a[0].test == b[0].test);
  auto c = split_dataset(50, {0.7, 0.1, 0.2}, 1, 10);
  CHECK(a[0].train != c[0].train);
}

TEST_CASE("k-fold test blocks are disjoint and every fold partitions") {
  const int n = 53, folds = 10;
  auto splits = split_dataset(n, {0.7, 0.1, 0.2}, folds, 3);
  REQUIRE(static_cast<int>(splits.size()) == folds);
  std::set<int> test_union;
  for (const auto& s : splits) {
    std::set<int> seen;
    for (int i : s.train) seen.insert(i);
    for (int i : s.val) seen.insert(i);
    for (int i : s.test) seen.insert(i);
    CHECK(static_cast<int>(seen.size()) == n);  // partition per fold
    for (int i : s.test) {
      CHECK_FALSE(test_union.count(i));  // disjoint across folds
      test_union.insert(i);
    }
    CHECK(s.test.size() == n / folds);
  }
}

TEST_CASE("invalid split arguments are usage errors") {
  CHECK_THROWS_AS(split_dataset(0, {0.7, 0.1, 0.2}, 1, 1), Error);
  CHECK_THROWS_AS(split_dataset(10, {0.7, 0.1, 0.2}, 0, 1), Error);
  CHECK_THROWS_AS(split_dataset(3, {0.7, 0.1, 0.2}, 10, 1), Error);
}

TEST_CASE("external metric slots are intentionally unconfigured") {
  try {
    external_metric("chexbert", "a", "b");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("external model not configured") !=
          std::string::npos);
  }
}
