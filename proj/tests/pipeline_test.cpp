#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <cstdlib>
#include <map>
#include <random>

#include "fcrx/error.hpp"
#include "fcrx/pipeline.hpp"

using namespace fcrx;

namespace {

const Lexicon& lex() {
  static Lexicon l = load_lexicon("data/lexicon.json");
  return l;
}

FindingRecord record(bool verdict, const BBox& indicated, const BBox& predicted) {
  FindingRecord r;
  r.verdict = verdict;
  r.e_hat = verdict ? 0.9 : 0.1;
  r.indicated = indicated;
  r.predicted = predicted;
  return r;
}

// Brute-force restatement of the score with no shared code: mean realness
// over all records plus mean halved IoU, halved again.
double oracle_fc(const std::vector<FindingRecord>& rs) {
  double real = 0, overlap = 0;
  for (const auto& r : rs) {
    if (r.verdict) real += 1.0;
    double i;
    const BBox &a = r.indicated, &b = r.predicted;
    double ax2 = a.x + a.w, ay2 = a.y + a.h, bx2 = b.x + b.w, by2 = b.y + b.h;
    double ix = std::max(0.0, std::min(ax2, bx2) - std::max(a.x, b.x));
    double iy = std::max(0.0, std::min(ay2, by2) - std::max(a.y, b.y));
    double inter = ix * iy, uni = a.w * a.h + b.w * b.h - inter;
    if (a.w * a.h < 1e-6 && b.w * b.h < 1e-6)
      i = 1.0;
    else if (uni <= 0.0)
      i = 0.0;
    else
      i = inter / uni;
    overlap += i / 2.0;
  }
  double n = static_cast<double>(rs.size());
  return 0.5 * (real / n + overlap / n);
}

}  // namespace

TEST_CASE("fc score equals the brute-force oracle on 1000 random record sets") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 8);
  for (int t = 0; t < 1000; ++t) {
    std::vector<FindingRecord> rs;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
      auto box = [&] {
        if (u(rng) < 0.2) return BBox{};
        double x = 0.6 * u(rng), y = 0.6 * u(rng);
        return BBox{x, y, 0.05 + 0.3 * u(rng), 0.05 + 0.3 * u(rng)};
      };
      rs.push_back(record(u(rng) < 0.5, box(), box()));
    }
    auto got = fc_score(rs);
    REQUIRE(got.has_value());
    CHECK(std::abs(*got - oracle_fc(rs)) <= 1e-9);
    CHECK(*got >= 0.0);
    CHECK(*got <= 0.75 + 1e-12);
  }
}

TEST_CASE("fc score anchors") {
  BBox b{0.1, 0.1, 0.4, 0.4};
  std::vector<FindingRecord> perfect = {record(true, b, b), record(true, b, b)};
  CHECK(*fc_score(perfect) == doctest::Approx(0.75));

  std::vector<FindingRecord> worst = {record(false, b, BBox{0.6, 0.6, 0.3, 0.3})};
  CHECK(*fc_score(worst) == doctest::Approx(0.0));

  // Both boxes zero counts as full overlap, halved.
  std::vector<FindingRecord> zeros = {record(true, BBox{}, BBox{})};
  CHECK(*fc_score(zeros) == doctest::Approx(0.75));

  CHECK_FALSE(fc_score({}).has_value());
}

TEST_CASE("fc score literal denominator reading") {
  BBox b{0.1, 0.1, 0.4, 0.4};
  std::vector<FindingRecord> rs = {record(true, b, b), record(false, b, b)};
  // Prose reading: (1/2 + mean(0.5))/2 = 0.5; literal: (1/1 + 0.5)/2 = 0.75.
  CHECK(*fc_score(rs) == doctest::Approx(0.5));
  CHECK(*fc_score(rs, true) == doctest::Approx(0.75));
  std::vector<FindingRecord> none = {record(false, b, b)};
  CHECK_FALSE(fc_score(none, true).has_value());  // 0/0 in the literal form
}

TEST_CASE("flipping any verdict 0->1 never decreases the score") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<FindingRecord> rs;
    for (int i = 0; i < 5; ++i)
      rs.push_back(record(u(rng) < 0.5, BBox{0.1, 0.1, 0.3, 0.3},
                          BBox{0.2, 0.2, 0.3, 0.3}));
    double base = *fc_score(rs);
    for (auto& r : rs) {
      if (r.verdict) continue;
      r.verdict = true;
      CHECK(*fc_score(rs) >= base - 1e-12);
      r.verdict = false;
    }
  }
}

TEST_CASE("ground-truth comparison matches on polarity/core, anatomy when both") {
  FindingRecord r;
  r.pattern.core = "pleural effusion";
  r.pattern.present = true;
  r.pattern.anatomy = "left lung";
  r.indicated = BBox{0.5, 0.2, 0.3, 0.5};
  r.verdict = true;

  GroundTruthPair g;
  g.pattern.core = "pleural effusion";
  g.pattern.present = true;
  g.box = r.indicated;

  // Anatomy absent on the ground-truth side: still a match.
  auto v = fc_score_against_ground_truth({r}, {g});
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(0.75));

  g.pattern.anatomy = "right lung";  // now both carry anatomy and disagree
  CHECK_FALSE(fc_score_against_ground_truth({r}, {g}).has_value());

  g.pattern.anatomy = "left lung";
  CHECK(fc_score_against_ground_truth({r}, {g}).has_value());

  // Polarity mismatch is never a match.
  g.pattern.present = false;
  CHECK_FALSE(fc_score_against_ground_truth({r}, {g}).has_value());
}

TEST_CASE("offline reformer strips conjunctions, capitalizes, adds a period") {
  OfflineReformer ref;
  CHECK(ref.rewrite("and the right atelectasis still remains") ==
        "The right atelectasis still remains.");
  CHECK(ref.rewrite(", but cardiomegaly persists") == "Cardiomegaly persists.");
  CHECK(ref.rewrite("clear lungs") == "Clear lungs.");
  CHECK(ref.rewrite("") == "");
  CHECK(ref.rewrite("and or ,") == "");
}

namespace {

// FCReport for a report text with chosen verdict per extracted pattern.
FCReport fake_check(const std::string& text,
                    const std::map<std::string, bool>& verdict_by_core) {
  FCReport rep;
  ExtractionResult ex = extract_ffl(text, lex());
  rep.sentences = ex.sentences;
  for (const auto& p : ex.patterns) {
    FindingRecord r;
    r.pattern = p;
    auto it = verdict_by_core.find(p.core);
    r.verdict = it == verdict_by_core.end() ? true : it->second;
    r.e_hat = r.verdict ? 0.9 : 0.1;
    rep.records.push_back(r);
  }
  rep.fc = fc_score(rep.records);
  return rep;
}

}  // namespace

TEST_CASE("correction removes the flagged claim and reforms the remainder") {
  std::string text =
      "Left-sided pleural effusion found and the right atelectasis still remains.";
  FCReport rep = fake_check(text, {{"pleural effusion", false}});
  OfflineReformer ref;
  std::string corrected = correct_report(text, rep, ref);
  CHECK(corrected.find("pleural effusion") == std::string::npos);
  CHECK(corrected.find("atelectasis still remains") != std::string::npos);
  CHECK(corrected.back() == '.');
  CHECK(std::isupper(static_cast<unsigned char>(corrected[0])));
}

TEST_CASE("unflagged sentences are byte-identical") {
  std::string text =
      "Cardiomegaly is observed.  No edema or pneumothorax. Nodule is seen in the "
      "left upper lung zone.";
  FCReport rep = fake_check(text, {{"nodule", false}});
  OfflineReformer ref;
  std::string corrected = correct_report(text, rep, ref);
  CHECK(corrected == "Cardiomegaly is observed.  No edema or pneumothorax. ");
  CHECK(corrected.find("Nodule") == std::string::npos);

  // No flags at all: identity.
  FCReport clean = fake_check(text, {});
  CHECK(correct_report(text, clean, ref) == text);
}

TEST_CASE("sentence flagged in full is dropped") {
  std::string text = "Cardiomegaly is observed. Right pneumothorax is seen.";
  FCReport rep = fake_check(text, {{"pneumothorax", false}});
  OfflineReformer ref;
  std::string corrected = correct_report(text, rep, ref);
  CHECK(corrected == "Cardiomegaly is observed. ");
}

TEST_CASE("a negation cue shared with unflagged findings survives") {
  std::string text = "No consolidation, edema or pneumothorax.";
  FCReport rep = fake_check(text, {{"edema", false}});
  OfflineReformer ref;
  std::string corrected = correct_report(text, rep, ref);
  // "No" still governs the remaining findings.
  CHECK(corrected.find("No") != std::string::npos);
  CHECK(corrected.find("consolidation") != std::string::npos);
  CHECK(corrected.find("pneumothorax") != std::string::npos);
  CHECK(corrected.find("edema") == std::string::npos);

  // All findings flagged: the whole sentence goes.
  FCReport all = fake_check(
      text, {{"consolidation", false}, {"edema", false}, {"pneumothorax", false}});
  CHECK(correct_report(text, all, ref).empty());
}

TEST_CASE("rewriter factory falls back offline without the env URL") {
  unsetenv("FCRX_REWRITER_URL");
  std::string diag;
  auto rw = make_rewriter_from_env(false, &diag);
  REQUIRE(rw);
  CHECK(diag.find("offline") != std::string::npos);
  CHECK(rw->rewrite("and cardiomegaly persists") == "Cardiomegaly persists.");
  CHECK_THROWS_AS(make_rewriter_from_env(true), fcrx::Error);
}

TEST_CASE("explanation artifact carries verdicts and overlay geometry") {
  std::string text = "Cardiomegaly is observed.";
  FCReport rep = fake_check(text, {});
  rep.image_id = "img-9";
  rep.records[0].indicated = BBox{0.35, 0.45, 0.3, 0.28};
  rep.records[0].predicted = BBox{0.36, 0.44, 0.3, 0.28};
  std::vector<GroundTruthPair> gt(1);
  gt[0].pattern = rep.records[0].pattern;
  gt[0].box = rep.records[0].indicated;
  std::string json = fc_report_to_json(rep, &gt);
  CHECK(json.find("\"image_id\": \"img-9\"") != std::string::npos);
  CHECK(json.find("indicated_box") != std::string::npos);
  CHECK(json.find("predicted_box") != std::string::npos);
  CHECK(json.find("ground_truth_box") != std::string::npos);
  CHECK(json.find("cardiomegaly") != std::string::npos);
}
