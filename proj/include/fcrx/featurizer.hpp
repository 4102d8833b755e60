#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>

#include "fcrx/nn.hpp"
#include "fcrx/synth.hpp"

namespace fcrx {

// Pluggable embedding source standing in for the pretrained image/text
// encoders.  Implementations must be deterministic.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual int image_dim() const = 0;
  virtual int text_dim() const = 0;
  virtual nn::Vec image_vector(const std::string& image_id) const = 0;
  virtual nn::Vec finding_vector(bool present, const std::string& core) const = 0;
};

struct PlantedConfig {
  int image_dim = 768;
  int text_dim = 512;
  double noise_sigma = 0.1;
  double box_signal = 2.0;  // weight of box coordinates in the image vector
  std::uint64_t seed = 0;
};

// Deterministic synthetic embeddings: the image vector is the sum of a
// seeded identity direction per mentioned finding (separate directions
// for present and explicitly-absent mentions), plus a linear encoding of
// each present finding's box, plus per-image Gaussian noise.  Veracity
// and location are therefore statistically recoverable downstream.
class PlantedFeaturizer : public Featurizer {
 public:
  PlantedFeaturizer(PlantedConfig config, const std::vector<Sample>& samples);

  int image_dim() const override { return config_.image_dim; }
  int text_dim() const override { return config_.text_dim; }
  nn::Vec image_vector(const std::string& image_id) const override;
  nn::Vec finding_vector(bool present, const std::string& core) const override;

  const PlantedConfig& config() const { return config_; }

 private:
  nn::Vec seeded_vector(int dim, const std::string& key) const;

  PlantedConfig config_;
  std::map<std::string, nn::Vec> images_;       // precomputed image vectors
  std::map<std::string, nn::Vec> present_dir_;  // identity direction per finding
  std::map<std::string, nn::Vec> absent_dir_;
  std::map<std::string, std::array<nn::Vec, 4>> box_dir_;
  std::map<std::string, nn::Vec> text_cache_;
};

// Embeddings read from files of (id -> vector) records; one JSONL file
// for images ({"id","v"}) and one for finding labels keyed by their
// serialized "N|C" form.
class PrecomputedFeaturizer : public Featurizer {
 public:
  PrecomputedFeaturizer(const std::string& image_store_path,
                        const std::string& finding_store_path);

  int image_dim() const override { return image_dim_; }
  int text_dim() const override { return text_dim_; }
  nn::Vec image_vector(const std::string& image_id) const override;
  nn::Vec finding_vector(bool present, const std::string& core) const override;

 private:
  int image_dim_ = 0;
  int text_dim_ = 0;
  std::map<std::string, nn::Vec> images_;
  std::map<std::string, nn::Vec> findings_;
};

}  // namespace fcrx
