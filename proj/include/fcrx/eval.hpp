#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcrx/pipeline.hpp"

namespace fcrx {

// Report-level BLEU: geometric mean of clipped n-gram precisions (n=1..max_n)
// times brevity penalty; add-one smoothing on zero counts for n >= 2.
double bleu(const std::string& candidate, const std::string& reference, int max_n = 4);

std::vector<std::string> bleu_tokenize(const std::string& text);

struct Split {
  std::vector<int> train, val, test;
};

// Seeded partition of [0, n).  folds == 1: the ratios are applied exactly
// (largest remainder to train).  folds > 1: the shuffled order is cut into
// `folds` equal test blocks (disjoint across folds up to remainder), the
// following val_ratio share becomes validation, the rest training.
std::vector<Split> split_dataset(int n, std::array<double, 3> ratios, int folds,
                                 std::uint64_t seed);

struct CorpusEntry {
  std::string image_id;
  std::string automated_report;
  std::string ground_truth_report;
};

std::vector<CorpusEntry> load_corpus(const std::string& path);

struct ReportAssessment {
  std::string image_id;
  std::string corrected_report;
  double bleu_ag = 0.0;
  double bleu_cg = 0.0;
  std::optional<double> fc_ap;  // verifier score of the automated report
  std::optional<double> fc_ag;  // same formula against ground-truth findings
  std::optional<double> fc_cp;  // verifier score after correction
  std::optional<double> fc_cg;  // corrected report against ground-truth findings
};

struct EvalRun {
  std::string corpus_id;
  std::vector<ReportAssessment> reports;
  double mean_bleu_ag = 0.0;
  double mean_bleu_cg = 0.0;
  double mean_fc_ap = 0.0;  // over reports where defined
  double mean_fc_ag = 0.0;
  double mean_fc_cp = 0.0;
  double mean_fc_cg = 0.0;
  double concordance = 0.0;  // mean |fc_ap - fc_ag| where both defined
  double improvement = 0.0;  // mean relative improvement over metrics with m(A,G) > 0
};

EvalRun run_assessment(const std::vector<CorpusEntry>& corpus,
                       const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                       const Lexicon& lexicon, const RegionMap& region_map,
                       Rewriter& rewriter, const std::string& corpus_id = "corpus");

std::string eval_run_to_json(const EvalRun& run);
std::string eval_run_to_csv(const EvalRun& run);

// Semantic metric slots (CheXbert, RadGraph, ...) kept in the table schema;
// they raise until an external scorer is wired in.
double external_metric(const std::string& name, const std::string& candidate,
                       const std::string& reference);

}  // namespace fcrx
