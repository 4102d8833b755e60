#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fcrx/atlas.hpp"
#include "fcrx/bbox.hpp"
#include "fcrx/lexicon.hpp"

namespace fcrx {

// Finding triple plus normalized box; E=1 iff the pair came unmodified
// from ground truth.  An absent finding always carries the zero box.
struct FLPair {
  std::string type = kDefaultFindingType;
  bool present = true;     // polarity N
  std::string core;        // canonical core-finding name C
  BBox location;
  bool real = true;        // veracity bit E
  std::string provenance = "original";  // original|reversal|relocate|substitute

  bool same_content(const FLPair& o) const {
    return present == o.present && core == o.core && location == o.location;
  }
};

struct Sample {
  std::string image_id;
  std::vector<FLPair> real_pairs;
  std::vector<FLPair> fake_pairs;
};

struct GenConfig {
  int n_relocate = 2;
  int n_substitute = 1;
  double relocate_iou_max = 0.5;  // fakes must be genuinely mislocated
};

struct GenReport {
  int reversals = 0;
  int relocations = 0;
  int substitutions = 0;
  int skipped_relocations = 0;
  int skipped_substitutions = 0;
  int skipped_duplicates = 0;
};

// Polarity flip; the flipped pair always sits at the zero box when it
// becomes absent, and stays at the zero box when an absent finding is
// flipped to present (no location is invented for it).
FLPair reverse_pair(const FLPair& p);

// Same finding moved to a random pool box with IoU <= iou_max against the
// original.  nullopt when the pool has no admissible distinct box.
std::optional<FLPair> relocate_pair(const FLPair& p, const LocationPool& pools,
                                    std::mt19937_64& rng, double iou_max = 0.5);

// A finding the sample does not mention, at a random box from that
// finding's pool.  nullopt when no candidate finding has a non-empty pool.
std::optional<FLPair> substitute_pair(const Sample& sample, const LocationPool& pools,
                                      const std::vector<std::string>& all_findings,
                                      std::mt19937_64& rng);

// Per real pair: one reversal, n_relocate relocations, n_substitute
// substitutions.  Deterministic under seed; each sample gets an
// independent stream derived from (seed, image_id).
GenReport generate_dataset(std::vector<Sample>& samples, const LocationPool& pools,
                           const std::vector<std::string>& all_findings,
                           const GenConfig& config, std::uint64_t seed);

// JSON lines, one sample per line:
//   {"image_id": ..., "pairs": [{"n","c","x","y","w","h","e","provenance"}...]}
void save_samples(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> load_samples(const std::string& path);

std::uint64_t stream_seed(std::uint64_t seed, const std::string& key);

}  // namespace fcrx
