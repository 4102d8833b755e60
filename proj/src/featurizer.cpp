#include "fcrx/featurizer.hpp"

#include <fstream>
#include <set>

#include "fcrx/error.hpp"
#include "json.hpp"

namespace fcrx {

using nlohmann::json;

PlantedFeaturizer::PlantedFeaturizer(PlantedConfig config, const std::vector<Sample>& samples)
    : config_(config) {
  // Precompute every vector up front; the featurizer is immutable and
  // shared across threads afterwards.
  std::set<std::string> cores;
  for (const auto& s : samples)
    for (const auto& p : s.real_pairs) cores.insert(p.core);
  for (const auto& s : samples)
    for (const auto& p : s.fake_pairs) cores.insert(p.core);

  for (const auto& c : cores) {
    present_dir_[c] = seeded_vector(config_.image_dim, "img-present:" + c);
    absent_dir_[c] = seeded_vector(config_.image_dim, "img-absent:" + c);
    for (int k = 0; k < 4; ++k)
      box_dir_[c][k] = seeded_vector(config_.image_dim, "img-box:" + c + ":" + std::to_string(k));
    for (bool present : {true, false}) {
      std::string key = std::string("txt:") + (present ? "yes" : "no") + ":" + c;
      text_cache_[key] = seeded_vector(config_.text_dim, key);
    }
  }

  for (const auto& s : samples) {
    nn::Vec acc = nn::Vec::Zero(config_.image_dim);
    for (const FLPair& p : s.real_pairs) {
      if (p.present) {
        acc += present_dir_.at(p.core);
        const double coords[4] = {p.location.x, p.location.y, p.location.w, p.location.h};
        for (int k = 0; k < 4; ++k)
          acc += config_.box_signal * coords[k] * box_dir_.at(p.core)[k];
      } else {
        acc += absent_dir_.at(p.core);
      }
    }
    std::mt19937_64 rng(stream_seed(config_.seed, "noise:" + s.image_id));
    std::normal_distribution<double> gauss(0.0, config_.noise_sigma);
    for (int i = 0; i < config_.image_dim; ++i)
      acc[i] += gauss(rng) / std::sqrt(static_cast<double>(config_.image_dim));
    images_[s.image_id] = std::move(acc);
  }
}

nn::Vec PlantedFeaturizer::seeded_vector(int dim, const std::string& key) const {
  std::mt19937_64 rng(stream_seed(config_.seed, key));
  std::normal_distribution<double> gauss(0.0, 1.0);
  nn::Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v / std::sqrt(static_cast<double>(dim));
}

nn::Vec PlantedFeaturizer::image_vector(const std::string& image_id) const {
  auto it = images_.find(image_id);
  if (it == images_.end())
    throw data_error("featurizer: unknown image id '" + image_id + "'");
  return it->second;
}

nn::Vec PlantedFeaturizer::finding_vector(bool present, const std::string& core) const {
  std::string key = std::string("txt:") + (present ? "yes" : "no") + ":" + core;
  auto it = text_cache_.find(key);
  if (it != text_cache_.end()) return it->second;
  // Findings outside the training vocabulary still get a deterministic
  // vector; cache misses only happen for them.
  return seeded_vector(config_.text_dim, key);
}

namespace {

std::map<std::string, nn::Vec> load_store(const std::string& path, int* dim) {
  std::ifstream in(path);
  if (!in) throw data_error("embedding store: cannot open " + path);
  std::map<std::string, nn::Vec> store;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw data_error("embedding store: parse error at line " + std::to_string(lineno) +
                       " of " + path + ": " + e.what());
    }
    std::string id = j.at("id").get<std::string>();
    const auto& arr = j.at("v");
    nn::Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    if (*dim == 0) *dim = static_cast<int>(v.size());
    if (v.size() != *dim)
      throw data_error("embedding store: inconsistent vector length for '" + id + "'");
    store[id] = std::move(v);
  }
  if (store.empty()) throw data_error("embedding store: " + path + " is empty");
  return store;
}

}  // namespace

PrecomputedFeaturizer::PrecomputedFeaturizer(const std::string& image_store_path,
                                             const std::string& finding_store_path) {
  images_ = load_store(image_store_path, &image_dim_);
  findings_ = load_store(finding_store_path, &text_dim_);
}

nn::Vec PrecomputedFeaturizer::image_vector(const std::string& image_id) const {
  auto it = images_.find(image_id);
  if (it == images_.end())
    throw data_error("embedding store: missing image id '" + image_id + "'");
  return it->second;
}

nn::Vec PrecomputedFeaturizer::finding_vector(bool present, const std::string& core) const {
  std::string key = std::string(present ? "yes" : "no") + "|" + core;
  auto it = findings_.find(key);
  if (it == findings_.end())
    throw data_error("embedding store: missing finding '" + key + "'");
  return it->second;
}

}  // namespace fcrx
