#pragma once

#include <map>
#include <string>
#include <vector>

#include "fcrx/bbox.hpp"
#include "fcrx/lexicon.hpp"

namespace fcrx {

// Per-image anatomical region boxes, normalized to [0,1] at ingest.
// Immutable after construction; safe concurrent reads.
struct RegionMap {
  std::map<std::string, std::map<std::string, BBox>> images;  // image_id -> region -> box

  bool has_image(const std::string& image_id) const { return images.count(image_id) > 0; }
  const std::map<std::string, BBox>* regions_of(const std::string& image_id) const {
    auto it = images.find(image_id);
    return it == images.end() ? nullptr : &it->second;
  }
};

// Resolution outcome for a pattern's anatomy.  When the named region is
// missing from the image's annotation we degrade to the zero box and
// report it instead of aborting a batch.
struct IndicatedLocation {
  BBox box;
  bool located = true;
};

// All real boxes observed per finding name across a dataset; the sampling
// space for relocation and substitution fakes.
using LocationPool = std::map<std::string, std::vector<BBox>>;

// Annotation file: JSON lines, each
//   {"image_id": ..., "width": px, "height": px,
//    "regions": [{"name": ..., "x": px, "y": px, "w": px, "h": px}, ...]}
RegionMap ingest_annotations(const std::string& path, const Lexicon& lexicon);

IndicatedLocation indicated_location(const FFLPattern& p, const std::string& image_id,
                                     const RegionMap& rm, const Lexicon& lexicon);

struct FLPair;
struct Sample;

LocationPool build_pools(const std::vector<Sample>& samples);

}  // namespace fcrx
