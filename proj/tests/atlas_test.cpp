#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "fcrx/atlas.hpp"
#include "fcrx/error.hpp"
#include "fcrx/synth.hpp"

using namespace fcrx;

namespace {

const Lexicon& lex() {
  static Lexicon l = load_lexicon("data/lexicon.json");
  return l;
}

std::string write_tmp(const std::string& content) {
  static int n = 0;
  std::string path = "atlas_test_tmp_" + std::to_string(n++) + ".jsonl";
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("pixel annotations normalize by image dimensions") {
  std::string path = write_tmp(
      R"({"image_id":"a","width":2000,"height":1000,"regions":[)"
      R"({"name":"left lung","x":200,"y":100,"w":600,"h":600},)"
      R"({"name":"right lung","x":1200,"y":100,"w":600,"h":600}]})"
      "\n");
  RegionMap rm = ingest_annotations(path, lex());
  std::remove(path.c_str());
  const auto* regions = rm.regions_of("a");
  REQUIRE(regions);
  BBox ll = regions->at("left lung");
  // Hand normalization: 200/2000, 100/1000, 600/2000, 600/1000.
  CHECK(ll.x == doctest::Approx(0.1));
  CHECK(ll.y == doctest::Approx(0.1));
  CHECK(ll.w == doctest::Approx(0.3));
  CHECK(ll.h == doctest::Approx(0.6));
}

TEST_CASE("unknown region and out-of-range boxes are data errors") {
  std::string bad_region = write_tmp(
      R"({"image_id":"a","width":100,"height":100,"regions":[{"name":"flux capacitor","x":0,"y":0,"w":10,"h":10}]})"
      "\n");
  CHECK_THROWS_AS(ingest_annotations(bad_region, lex()), Error);
  try {
    ingest_annotations(bad_region, lex());
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("flux capacitor") != std::string::npos);
    CHECK(e.kind() == ErrorKind::data);
  }
  std::remove(bad_region.c_str());

  std::string bad_box = write_tmp(
      R"({"image_id":"a","width":100,"height":100,"regions":[{"name":"left lung","x":50,"y":0,"w":80,"h":10}]})"
      "\n");
  CHECK_THROWS_AS(ingest_annotations(bad_box, lex()), Error);
  std::remove(bad_box.c_str());
}

namespace {

RegionMap two_lung_map() {
  RegionMap rm;
  rm.images["img"]["left lung"] = BBox{0.55, 0.2, 0.35, 0.6};
  rm.images["img"]["right lung"] = BBox{0.10, 0.2, 0.35, 0.6};
  return rm;
}

}  // namespace

TEST_CASE("indicated location: direct, absent, default-union, unlocatable") {
  RegionMap rm = two_lung_map();

  FFLPattern direct;
  direct.core = "pleural effusion";
  direct.anatomy = "left lung";
  auto loc = indicated_location(direct, "img", rm, lex());
  CHECK(loc.located);
  CHECK(loc.box == BBox{0.55, 0.2, 0.35, 0.6});

  FFLPattern absent;
  absent.core = "pneumothorax";
  absent.present = false;
  auto zero = indicated_location(absent, "img", rm, lex());
  CHECK(zero.box.is_zero());

  // No anatomy: union of the default regions (both lungs); hand-computed
  // corners x:[0.10,0.90], y:[0.2,0.8].
  FFLPattern edema;
  edema.core = "edema";
  auto u = indicated_location(edema, "img", rm, lex());
  CHECK(u.located);
  CHECK(u.box.x == doctest::Approx(0.10));
  CHECK(u.box.y == doctest::Approx(0.2));
  CHECK(u.box.w == doctest::Approx(0.80));
  CHECK(u.box.h == doctest::Approx(0.6));

  // Region not annotated for this image degrades to an unlocatable zero box.
  FFLPattern missing;
  missing.core = "cardiomegaly";
  missing.anatomy = "cardiac silhouette";
  auto un = indicated_location(missing, "img", rm, lex());
  CHECK_FALSE(un.located);
  CHECK(un.box.is_zero());
}

TEST_CASE("unsided base region resolves to the union of sided variants") {
  RegionMap rm = two_lung_map();
  FFLPattern p;
  p.core = "edema";
  p.anatomy = "lung";  // bare base name
  auto loc = indicated_location(p, "img", rm, lex());
  CHECK(loc.located);
  CHECK(loc.box.x == doctest::Approx(0.10));
  CHECK(loc.box.w == doctest::Approx(0.80));
}

TEST_CASE("build_pools collects exactly the present non-zero real boxes") {
  std::vector<Sample> samples(2);
  samples[0].image_id = "a";
  samples[1].image_id = "b";
  FLPair e1{kDefaultFindingType, true, "edema", BBox{0.1, 0.1, 0.2, 0.2}, true, "original"};
  FLPair e2{kDefaultFindingType, true, "edema", BBox{0.3, 0.3, 0.2, 0.2}, true, "original"};
  FLPair absent{kDefaultFindingType, false, "nodule", BBox{}, true, "original"};
  samples[0].real_pairs = {e1, absent};
  samples[1].real_pairs = {e2};

  LocationPool pools = build_pools(samples);
  REQUIRE(pools.count("edema"));
  CHECK(pools.at("edema").size() == 2);
  CHECK_FALSE(pools.count("nodule"));

  // Multiset inclusion: every pooled box is one of the input boxes.
  for (const BBox& b : pools.at("edema"))
    CHECK((b == e1.location || b == e2.location));
}

TEST_CASE("every indicated location is a valid box or the zero box") {
  RegionMap rm = two_lung_map();
  for (const auto& f : lex().findings) {
    FFLPattern p;
    p.core = f.canonical;
    auto loc = indicated_location(p, "img", rm, lex());
    CHECK((loc.box.is_zero() || bbox_valid(loc.box)));
  }
}
