#include "fcrx/synth.hpp"

#include <algorithm>
#include <fstream>

#include "fcrx/error.hpp"
#include "json.hpp"

namespace fcrx {

using nlohmann::json;

std::uint64_t stream_seed(std::uint64_t seed, const std::string& key) {
  // FNV-1a over the key, mixed with the run seed (splitmix64 finalizer).
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

FLPair reverse_pair(const FLPair& p) {
  FLPair out = p;
  out.present = !p.present;
  out.location = BBox{};  // zero box either way
  out.real = false;
  out.provenance = "reversal";
  return out;
}

std::optional<FLPair> relocate_pair(const FLPair& p, const LocationPool& pools,
                                    std::mt19937_64& rng, double iou_max) {
  if (!p.present) return std::nullopt;
  auto it = pools.find(p.core);
  if (it == pools.end() || it->second.size() < 2) return std::nullopt;

  std::vector<const BBox*> admissible;
  for (const BBox& b : it->second)
    if (iou(b, p.location) <= iou_max) admissible.push_back(&b);
  if (admissible.empty()) return std::nullopt;

  std::uniform_int_distribution<size_t> pick(0, admissible.size() - 1);
  FLPair out = p;
  out.location = *admissible[pick(rng)];
  out.real = false;
  out.provenance = "relocate";
  return out;
}

std::optional<FLPair> substitute_pair(const Sample& sample, const LocationPool& pools,
                                      const std::vector<std::string>& all_findings,
                                      std::mt19937_64& rng) {
  std::vector<std::string> candidates;
  for (const auto& name : all_findings) {
    bool mentioned = std::any_of(sample.real_pairs.begin(), sample.real_pairs.end(),
                                 [&](const FLPair& p) { return p.core == name; });
    auto pit = pools.find(name);
    if (!mentioned && pit != pools.end() && !pit->second.empty())
      candidates.push_back(name);
  }
  if (candidates.empty()) return std::nullopt;

  std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
  const std::string& name = candidates[pick(rng)];
  const auto& pool = pools.at(name);
  std::uniform_int_distribution<size_t> pick_box(0, pool.size() - 1);

  FLPair out;
  out.present = true;
  out.core = name;
  out.location = pool[pick_box(rng)];
  out.real = false;
  out.provenance = "substitute";
  return out;
}

GenReport generate_dataset(std::vector<Sample>& samples, const LocationPool& pools,
                           const std::vector<std::string>& all_findings,
                           const GenConfig& config, std::uint64_t seed) {
  GenReport report;
  for (Sample& s : samples) {
    std::mt19937_64 rng(stream_seed(seed, s.image_id));
    s.fake_pairs.clear();

    auto equals_real = [&](const FLPair& f) {
      return std::any_of(s.real_pairs.begin(), s.real_pairs.end(),
                         [&](const FLPair& r) { return r.same_content(f); });
    };
    auto push_fake = [&](FLPair f, int& counter) {
      if (equals_real(f)) {
        ++report.skipped_duplicates;
        return;
      }
      s.fake_pairs.push_back(std::move(f));
      ++counter;
    };

    for (const FLPair& p : s.real_pairs) {
      push_fake(reverse_pair(p), report.reversals);
      for (int k = 0; k < config.n_relocate; ++k) {
        auto f = relocate_pair(p, pools, rng, config.relocate_iou_max);
        if (f) push_fake(*f, report.relocations);
        else ++report.skipped_relocations;
      }
      for (int k = 0; k < config.n_substitute; ++k) {
        auto f = substitute_pair(s, pools, all_findings, rng);
        if (f) push_fake(*f, report.substitutions);
        else ++report.skipped_substitutions;
      }
    }
  }
  return report;
}

namespace {

json pair_to_json(const FLPair& p) {
  json j;
  j["n"] = p.present ? "yes" : "no";
  j["c"] = p.core;
  j["x"] = p.location.x;
  j["y"] = p.location.y;
  j["w"] = p.location.w;
  j["h"] = p.location.h;
  j["e"] = p.real ? 1 : 0;
  j["provenance"] = p.provenance;
  return j;
}

FLPair pair_from_json(const json& j) {
  FLPair p;
  std::string n = j.at("n").get<std::string>();
  if (n != "yes" && n != "no") throw data_error("samples: bad polarity '" + n + "'");
  p.present = n == "yes";
  p.core = j.at("c").get<std::string>();
  p.location = BBox{j.at("x").get<double>(), j.at("y").get<double>(),
                    j.at("w").get<double>(), j.at("h").get<double>()};
  p.real = j.at("e").get<int>() == 1;
  p.provenance = j.value("provenance", p.real ? "original" : "unknown");
  return p;
}

}  // namespace

void save_samples(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("samples: cannot write " + path);
  for (const auto& s : samples) {
    json j;
    j["image_id"] = s.image_id;
    json pairs = json::array();
    for (const auto& p : s.real_pairs) pairs.push_back(pair_to_json(p));
    for (const auto& p : s.fake_pairs) pairs.push_back(pair_to_json(p));
    j["pairs"] = std::move(pairs);
    out << j.dump() << "\n";
  }
}

std::vector<Sample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("samples: cannot open " + path);
  std::vector<Sample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw data_error("samples: parse error at line " + std::to_string(lineno) + ": " + e.what());
    }
    Sample s;
    try {
      s.image_id = j.at("image_id").get<std::string>();
      for (const auto& pj : j.at("pairs")) {
        FLPair p = pair_from_json(pj);
        (p.real ? s.real_pairs : s.fake_pairs).push_back(std::move(p));
      }
    } catch (const json::exception& e) {
      throw data_error("samples: bad record at line " + std::to_string(lineno) + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace fcrx
