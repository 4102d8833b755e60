#include "fcrx/atlas.hpp"

#include <fstream>

#include "fcrx/error.hpp"
#include "fcrx/synth.hpp"
#include "json.hpp"

namespace fcrx {

using nlohmann::json;

RegionMap ingest_annotations(const std::string& path, const Lexicon& lexicon) {
  std::ifstream in(path);
  if (!in) throw data_error("atlas: cannot open " + path);

  RegionMap rm;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw data_error("atlas: parse error at line " + std::to_string(lineno) + ": " + e.what());
    }
    std::string image_id;
    double width = 0, height = 0;
    try {
      image_id = rec.at("image_id").get<std::string>();
      width = rec.at("width").get<double>();
      height = rec.at("height").get<double>();
      if (width <= 0 || height <= 0)
        throw data_error("atlas: non-positive image dims at line " + std::to_string(lineno));
      auto& regions = rm.images[image_id];
      for (const auto& r : rec.at("regions")) {
        std::string name = r.at("name").get<std::string>();
        if (!lexicon.region_by_canonical.count(name))
          throw data_error("atlas: unknown region '" + name + "' for image '" + image_id +
                           "' at line " + std::to_string(lineno));
        BBox b{r.at("x").get<double>() / width, r.at("y").get<double>() / height,
               r.at("w").get<double>() / width, r.at("h").get<double>() / height};
        if (!bbox_valid(b))
          throw data_error("atlas: out-of-range box for region '" + name + "' of image '" +
                           image_id + "' at line " + std::to_string(lineno));
        regions[name] = b;
      }
    } catch (const json::exception& e) {
      throw data_error("atlas: bad record at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rm;
}

namespace {

// Union of the boxes of the given canonical regions present in the image.
IndicatedLocation union_of(const std::map<std::string, BBox>& regions,
                           const std::vector<std::string>& names) {
  bool any = false;
  BBox acc;
  for (const auto& name : names) {
    auto it = regions.find(name);
    if (it == regions.end()) continue;
    acc = any ? union_box(acc, it->second) : it->second;
    any = true;
  }
  if (!any) return {BBox{}, false};
  return {acc, true};
}

}  // namespace

IndicatedLocation indicated_location(const FFLPattern& p, const std::string& image_id,
                                     const RegionMap& rm, const Lexicon& lexicon) {
  if (!p.present) return {BBox{}, true};  // absent findings live at the zero box

  const auto* regions = rm.regions_of(image_id);
  if (!regions) return {BBox{}, false};

  if (p.anatomy) {
    auto it = regions->find(*p.anatomy);
    if (it != regions->end()) return {it->second, true};
    // Unsided base name: the union of its sided variants.
    auto sided = region_base_candidates(lexicon, *p.anatomy);
    if (!sided.empty()) return union_of(*regions, sided);
    return {BBox{}, false};
  }

  // No anatomy phrase: the union of the finding's default regions.
  const FindingEntry* fe = lexicon.finding(p.core);
  if (!fe || fe->default_regions.empty()) return {BBox{}, false};
  std::vector<std::string> names;
  for (const auto& dr : fe->default_regions) {
    if (lexicon.region_by_canonical.count(dr)) {
      names.push_back(dr);
    } else {
      for (auto& s : region_base_candidates(lexicon, dr)) names.push_back(s);
    }
  }
  return union_of(*regions, names);
}

LocationPool build_pools(const std::vector<Sample>& samples) {
  LocationPool pools;
  for (const auto& s : samples)
    for (const auto& p : s.real_pairs)
      if (p.present && !p.location.is_zero()) pools[p.core].push_back(p.location);
  return pools;
}

}  // namespace fcrx
