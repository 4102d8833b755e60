#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcrx/atlas.hpp"
#include "fcrx/lexicon.hpp"
#include "fcrx/model.hpp"

namespace fcrx {

struct FindingRecord {
  FFLPattern pattern;
  BBox indicated;       // L_A, from the atlas
  bool located = true;  // false when the region was missing from the image
  BBox predicted;       // L_p, from the model
  double e_hat = 0.0;
  bool verdict = false;  // E
};

struct FCReport {
  std::string image_id;
  std::vector<FindingRecord> records;
  std::vector<SentenceTokens> sentences;
  std::optional<double> fc;  // empty when no findings were extracted
  std::optional<std::string> corrected_text;
  int skipped_candidates = 0;
  int unlocatable = 0;
};

// One-request/one-reply text contract for sentence reforming.
class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual std::string rewrite(const std::string& fragment) = 0;
};

// Deterministic fallback: strips dangling conjunctions and commas,
// capitalizes, and terminates with a period.
class OfflineReformer : public Rewriter {
 public:
  std::string rewrite(const std::string& fragment) override;
};

// HTTP endpoint configured through FCRX_REWRITER_URL / FCRX_REWRITER_MODEL /
// FCRX_REWRITER_KEY; falls back to the offline reformer on failure unless
// required is set, in which case failure raises a rewriter error.
std::unique_ptr<Rewriter> make_rewriter_from_env(bool required = false,
                                                 std::string* diagnostics = nullptr);

FCReport check_report(const std::string& report_text, const std::string& image_id,
                      const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                      const Lexicon& lexicon, const RegionMap& region_map);

// Eq.-6-style score: half the fraction of real verdicts plus half the mean
// of IoU/2 between indicated and predicted boxes.  Two zero boxes count as
// IoU 1.  literal_denominator divides the first term by the number of real
// verdicts instead of the record count.
std::optional<double> fc_score(const std::vector<FindingRecord>& records,
                               bool literal_denominator = false);

// Same formula with verdicts replaced by ground-truth matches and boxes by
// the matched ground-truth boxes (zero for unmatched claims).  Matching is
// on polarity and core finding, with anatomy compared only when both sides
// carry one.  Empty match set -> no score.
struct GroundTruthPair {
  FFLPattern pattern;
  BBox box;
};
std::optional<double> fc_score_against_ground_truth(
    const std::vector<FindingRecord>& records, const std::vector<GroundTruthPair>& gt);

// Removes the flagged findings' word spans sentence by sentence, reforms
// the remaining fragment through the rewriter, and leaves unflagged
// sentences byte-identical.
std::string correct_report(const std::string& report_text, const FCReport& fc_report,
                           Rewriter& rewriter);

// Explanation artifact for external overlay rendering.
std::string fc_report_to_json(const FCReport& report,
                              const std::vector<GroundTruthPair>* gt = nullptr);

}  // namespace fcrx
