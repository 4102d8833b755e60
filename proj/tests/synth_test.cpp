#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "fcrx/synth.hpp"

using namespace fcrx;

namespace {

FLPair present_pair(const std::string& core, const BBox& b) {
  FLPair p;
  p.core = core;
  p.location = b;
  return p;
}

}  // namespace

TEST_CASE("reversal of a present finding zeroes the box") {
  FLPair original = present_pair("edema", BBox{0.14, 0.13, 0.72, 0.56});
  FLPair rev = reverse_pair(original);
  CHECK_FALSE(rev.present);
  CHECK(rev.core == "edema");
  CHECK(rev.location.is_zero());
  CHECK_FALSE(rev.real);
  CHECK(rev.provenance == "reversal");
}

TEST_CASE("reversal of an absent finding stays at the zero box") {
  FLPair absent;
  absent.core = "pneumothorax";
  absent.present = false;
  FLPair rev = reverse_pair(absent);
  CHECK(rev.present);
  CHECK(rev.location.is_zero());
  CHECK_FALSE(rev.real);
}

TEST_CASE("double reversal restores polarity and finding") {
  FLPair p = present_pair("edema", BBox{0.1, 0.1, 0.2, 0.2});
  FLPair back = reverse_pair(reverse_pair(p));
  CHECK(back.present == p.present);
  CHECK(back.core == p.core);
}

TEST_CASE("relocation draws from the pool, avoids overlap, skips tiny pools") {
  LocationPool pools;
  pools["edema"] = {BBox{0.14, 0.13, 0.72, 0.56}, BBox{0.85, 0.74, 0.10, 0.21},
                    BBox{0.02, 0.48, 0.10, 0.14}, BBox{0.15, 0.14, 0.72, 0.56}};
  FLPair p = present_pair("edema", pools["edema"][0]);

  std::mt19937_64 rng(1234);
  int draws = 0;
  for (int t = 0; t < 1000; ++t) {
    auto f = relocate_pair(p, pools, rng, 0.5);
    REQUIRE(f.has_value());
    ++draws;
    CHECK_FALSE(f->real);
    CHECK(f->core == "edema");
    CHECK(f->provenance == "relocate");
    // Membership and admissibility, zero violations allowed.
    bool in_pool = std::count(pools["edema"].begin(), pools["edema"].end(), f->location) > 0;
    CHECK(in_pool);
    CHECK(iou(f->location, p.location) <= 0.5);
    // The near-duplicate jittered box must never be drawn.
    CHECK_FALSE(f->location == pools["edema"][3]);
  }
  CHECK(draws == 1000);

  LocationPool tiny;
  tiny["edema"] = {p.location};
  CHECK_FALSE(relocate_pair(p, tiny, rng, 0.5).has_value());

  FLPair absent;
  absent.core = "edema";
  absent.present = false;
  CHECK_FALSE(relocate_pair(absent, pools, rng, 0.5).has_value());
}

TEST_CASE("substitution picks an unmentioned finding at a pool box") {
  Sample s;
  s.image_id = "img";
  s.real_pairs = {present_pair("edema", BBox{0.1, 0.1, 0.5, 0.5})};
  LocationPool pools;
  pools["edema"] = {BBox{0.1, 0.1, 0.5, 0.5}};
  pools["lung cyst"] = {BBox{0.02, 0.48, 0.10, 0.14}, BBox{0.03, 0.50, 0.10, 0.14}};
  pools["nodule"] = {BBox{0.6, 0.2, 0.1, 0.1}};
  std::vector<std::string> all = {"edema", "lung cyst", "nodule"};

  std::mt19937_64 rng(99);
  for (int t = 0; t < 1000; ++t) {
    auto f = substitute_pair(s, pools, all, rng);
    REQUIRE(f.has_value());
    CHECK_FALSE(f->real);
    CHECK(f->provenance == "substitute");
    CHECK(f->core != "edema");  // never a mentioned finding
    bool in_pool = std::count(pools[f->core].begin(), pools[f->core].end(),
                              f->location) > 0;
    CHECK(in_pool);
  }

  // Every finding mentioned -> skip.
  Sample full;
  full.real_pairs = {present_pair("edema", {}), present_pair("lung cyst", {}),
                     present_pair("nodule", {})};
  CHECK_FALSE(substitute_pair(full, pools, all, rng).has_value());
}

TEST_CASE("generate_dataset: Table-1-shaped counts and determinism") {
  auto make_samples = [] {
    std::vector<Sample> samples(3);
    samples[0].image_id = "a";
    samples[0].real_pairs = {present_pair("edema", BBox{0.14, 0.13, 0.72, 0.56})};
    samples[1].image_id = "b";
    samples[1].real_pairs = {present_pair("edema", BBox{0.85, 0.74, 0.10, 0.21})};
    samples[2].image_id = "c";
    samples[2].real_pairs = {present_pair("lung cyst", BBox{0.02, 0.48, 0.10, 0.14}),
                             present_pair("edema", BBox{0.40, 0.40, 0.30, 0.30})};
    return samples;
  };
  LocationPool pools = build_pools(make_samples());
  std::vector<std::string> all = {"edema", "lung cyst", "nodule"};

  auto s1 = make_samples();
  GenConfig cfg;  // defaults: 1 reversal, 2 relocate, 1 substitute
  GenReport rep1 = generate_dataset(s1, pools, all, cfg, 42);

  // Sample "a": 1 real pair -> 1 reversal + up to 2 relocations + 1 substitution.
  CHECK(rep1.reversals == 4);
  int fake_total = 0;
  for (const auto& s : s1) {
    fake_total += static_cast<int>(s.fake_pairs.size());
    for (const auto& f : s.fake_pairs) {
      CHECK_FALSE(f.real);
      for (const auto& r : s.real_pairs) CHECK_FALSE(f.same_content(r));
    }
    for (const auto& r : s.real_pairs) CHECK(r.real);
  }
  CHECK(fake_total == rep1.reversals + rep1.relocations + rep1.substitutions);
  CHECK(rep1.relocations + rep1.skipped_relocations == 8);
  CHECK(rep1.substitutions + rep1.skipped_substitutions == 4);

  auto s2 = make_samples();
  generate_dataset(s2, pools, all, cfg, 42);
  REQUIRE(s1.size() == s2.size());
  for (size_t i = 0; i < s1.size(); ++i) {
    REQUIRE(s1[i].fake_pairs.size() == s2[i].fake_pairs.size());
    for (size_t k = 0; k < s1[i].fake_pairs.size(); ++k)
      CHECK(s1[i].fake_pairs[k].same_content(s2[i].fake_pairs[k]));
  }

  // A different seed changes draws but not the counter structure.
  auto s3 = make_samples();
  GenReport rep3 = generate_dataset(s3, pools, all, cfg, 43);
  CHECK(rep3.reversals == rep1.reversals);
  CHECK(rep3.relocations + rep3.skipped_relocations == 8);
}

TEST_CASE("samples round-trip through jsonl") {
  std::vector<Sample> samples(1);
  samples[0].image_id = "img-1";
  samples[0].real_pairs = {present_pair("edema", BBox{0.14, 0.13, 0.72, 0.56})};
  FLPair fake = reverse_pair(samples[0].real_pairs[0]);
  samples[0].fake_pairs = {fake};

  std::string path = "synth_test_tmp.jsonl";
  save_samples(samples, path);
  auto back = load_samples(path);
  std::remove(path.c_str());

  REQUIRE(back.size() == 1);
  CHECK(back[0].image_id == "img-1");
  REQUIRE(back[0].real_pairs.size() == 1);
  REQUIRE(back[0].fake_pairs.size() == 1);
  CHECK(back[0].real_pairs[0].same_content(samples[0].real_pairs[0]));
  CHECK(back[0].fake_pairs[0].same_content(samples[0].fake_pairs[0]));
  CHECK(back[0].fake_pairs[0].provenance == "reversal");
}

TEST_CASE("stream_seed separates keys and is stable") {
  CHECK(stream_seed(1, "a") != stream_seed(1, "b"));
  CHECK(stream_seed(1, "a") != stream_seed(2, "a"));
  CHECK(stream_seed(7, "train") == stream_seed(7, "train"));
}
