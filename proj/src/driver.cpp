#include "fcrx/driver.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

#include "fcrx/error.hpp"
#include "fcrx/pipeline.hpp"

namespace fcrx {

using json = nlohmann::ordered_json;

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  out << content;
}

}  // namespace

DriverResult run_toy_pipeline(const DriverConfig& config, const Lexicon& lexicon,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  const bool persist = !out_dir.empty();
  if (persist) fs::create_directories(out_dir);
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  ToyConfig toy_cfg = config.toy;
  toy_cfg.seed = config.seed;
  ToyData toy = generate_toy(toy_cfg, lexicon);
  if (persist) {
    write_toy_annotations(toy, path("annotations.jsonl"));
    write_toy_reports(toy, path("reports.jsonl"));
    write_toy_corpus(toy, path("corpus.jsonl"));
  }

  // The atlas is round-tripped through its file format even in memory so
  // the in-memory path cannot drift from the CLI path.
  RegionMap region_map;
  {
    std::string ann = persist
        ? path("annotations.jsonl")
        : (fs::temp_directory_path() /
           ("fcrx-ann-" + std::to_string(config.seed) + "-" +
            std::to_string(toy.reports.size()) + ".jsonl")).string();
    if (!persist) write_toy_annotations(toy, ann);
    region_map = ingest_annotations(ann, lexicon);
    if (!persist) fs::remove(ann);
  }

  std::vector<std::pair<std::string, std::string>> gt_reports;
  for (const ToyReport& r : toy.reports) gt_reports.emplace_back(r.image_id, r.ground_truth);
  std::vector<Sample> samples = build_samples(gt_reports, lexicon, region_map);

  DriverResult result;
  auto splits = split_dataset(static_cast<int>(samples.size()), {0.7, 0.1, 0.2}, 1,
                              config.seed);
  const Split& split = splits[0];
  result.n_train = static_cast<int>(split.train.size());
  result.n_val = static_cast<int>(split.val.size());
  result.n_test = static_cast<int>(split.test.size());

  std::vector<Sample> train_set, test_set;
  for (int i : split.train) train_set.push_back(samples[i]);
  for (int i : split.test) test_set.push_back(samples[i]);

  // Pools come from the training split only; fakes are generated for both
  // sides so held-out accuracy is measured on the same kind of task.
  LocationPool pools = build_pools(train_set);
  std::vector<std::string> vocabulary = toy_findings();
  result.generation = generate_dataset(train_set, pools, vocabulary, config.gen,
                                       config.seed);
  generate_dataset(test_set, pools, vocabulary, config.gen, config.seed + 1);
  if (persist) {
    save_samples(train_set, path("train_samples.jsonl"));
    // All ground-truth samples: what the planted featurizer is built over,
    // so `check`/`eval run` can reconstruct it for any image.
    save_samples(samples, path("samples.jsonl"));
  }

  PlantedConfig pc = config.planted;
  pc.seed = config.seed;
  PlantedFeaturizer featurizer(pc, samples);

  result.checkpoint = train(train_set, featurizer, config.model, config.seed);
  if (persist) save_checkpoint(result.checkpoint, path("checkpoint.json"));
  result.metrics = evaluate(result.checkpoint, featurizer, test_set);

  std::vector<CorpusEntry> corpus;
  std::set<int> test_ids(split.test.begin(), split.test.end());
  for (int i : split.test) {
    const ToyReport& r = toy.reports[i];
    corpus.push_back(CorpusEntry{r.image_id, r.automated, r.ground_truth});
  }
  OfflineReformer reformer;
  result.eval = run_assessment(corpus, result.checkpoint, featurizer, lexicon,
                               region_map, reformer, "toy");

  if (persist) {
    write_text(path("eval.json"), eval_run_to_json(result.eval));
    write_text(path("eval.csv"), eval_run_to_csv(result.eval));
    write_text(path("metrics.json"), metrics_to_json(result));
  }
  return result;
}

std::string metrics_to_json(const DriverResult& r) {
  json j;
  j["splits"] = {{"train", r.n_train}, {"val", r.n_val}, {"test", r.n_test}};
  j["generation"] = {{"reversals", r.generation.reversals},
                     {"relocations", r.generation.relocations},
                     {"substitutions", r.generation.substitutions},
                     {"skipped_relocations", r.generation.skipped_relocations},
                     {"skipped_substitutions", r.generation.skipped_substitutions},
                     {"skipped_duplicates", r.generation.skipped_duplicates}};
  j["test"] = {{"accuracy", r.metrics.accuracy},
               {"miou", r.metrics.miou},
               {"miou_pairs", r.metrics.miou_pairs},
               {"miou_excluded", r.metrics.miou_excluded},
               {"n_pairs", r.metrics.n_pairs}};
  j["reports"] = {{"bleu_ag", r.eval.mean_bleu_ag},
                  {"bleu_cg", r.eval.mean_bleu_cg},
                  {"fc_ap", r.eval.mean_fc_ap},
                  {"fc_ag", r.eval.mean_fc_ag},
                  {"fc_cp", r.eval.mean_fc_cp},
                  {"fc_cg", r.eval.mean_fc_cg},
                  {"concordance", r.eval.concordance},
                  {"improvement", r.eval.improvement}};
  return j.dump(2);
}

}  // namespace fcrx
