#pragma once

#include <cstdint>
#include <string>

#include "fcrx/eval.hpp"
#include "fcrx/featurizer.hpp"
#include "fcrx/model.hpp"
#include "fcrx/toy.hpp"

namespace fcrx {

// End-to-end synthetic-corpus run: generate anatomy + reports, build the
// labeled pair dataset, train, evaluate on the held-out split, then score
// and correct the automated reports of the test images.
struct DriverConfig {
  ToyConfig toy;
  PlantedConfig planted;
  ModelConfig model;
  GenConfig gen;
  std::uint64_t seed = 7;

  DriverConfig() {
    planted.image_dim = 64;
    planted.text_dim = 32;
    planted.noise_sigma = 0.05;
    model.image_dim = 64;
    model.text_dim = 32;
    model.proj_dim = 32;
    model.hidden_dim = 64;
    model.max_lr = 3e-3;  // desk-scale corpus wants a desk-scale step size
  }
};

struct DriverResult {
  ModelCheckpoint checkpoint;
  Metrics metrics;       // held-out test split
  EvalRun eval;          // report assessment on the test images
  GenReport generation;
  int n_train = 0, n_val = 0, n_test = 0;
};

// out_dir empty: run fully in memory.  Otherwise annotations, reports,
// corpus, samples, checkpoint, and metric files are written there.
DriverResult run_toy_pipeline(const DriverConfig& config, const Lexicon& lexicon,
                              const std::string& out_dir = "");

std::string metrics_to_json(const DriverResult& r);

}  // namespace fcrx
