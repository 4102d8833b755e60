#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcrx/atlas.hpp"
#include "fcrx/lexicon.hpp"
#include "fcrx/synth.hpp"

namespace fcrx {

// Synthetic desk-scale corpus: jittered anatomy per image, a handful of
// present findings plus a negation list per report, and automated reports
// that copy the ground truth and append hallucinated claims.
struct ToyConfig {
  int n_images = 500;
  std::uint64_t seed = 7;
  double jitter = 0.015;          // per-image displacement of region boxes
  int min_present = 1, max_present = 2;
  int min_absent = 3, max_absent = 5;
  double p_hallucinate = 0.8;     // chance the automated report gains a false claim
  double p_second_hallucination = 0.3;
  // Findings whose location varies by side create input-identical
  // real/relocated pairs, so they are sampled as present less often.
  int unimodal_weight = 9;
  int bimodal_weight = 1;
};

struct ToyReport {
  std::string image_id;
  std::string ground_truth;
  std::string automated;
};

struct ToyData {
  std::vector<std::string> annotation_lines;  // atlas JSONL, pixel space
  std::vector<ToyReport> reports;
};

ToyData generate_toy(const ToyConfig& config, const Lexicon& lexicon);

// Files consumed by the rest of the pipeline.
void write_toy_annotations(const ToyData& data, const std::string& path);
void write_toy_corpus(const ToyData& data, const std::string& path);  // eval corpus
void write_toy_reports(const ToyData& data, const std::string& path); // {image_id, report}

// Ground-truth FL pairs for each report: one pair per extracted pattern,
// present pairs at their indicated location, absent pairs at the zero box.
std::vector<Sample> build_samples(const std::vector<std::pair<std::string, std::string>>& reports,
                                  const Lexicon& lexicon, const RegionMap& region_map);

std::vector<std::pair<std::string, std::string>> load_reports(const std::string& path);

// The finding vocabulary the toy templates draw from.
const std::vector<std::string>& toy_findings();

}  // namespace fcrx
