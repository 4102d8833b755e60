// fcrx: fact checking of structured radiology findings.
//
// One binary, one subcommand per pipeline stage; see README for the file
// formats.  Exit codes: 0 ok, 1 usage, 2 bad data, 3 numerical failure,
// 4 rewriter required but unavailable.

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fcrx/driver.hpp"
#include "fcrx/error.hpp"
#include "fcrx/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fcrx;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  out << content;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Effective config + hash + seed, written next to the primary output.
// Timestamps live in a separate file so primary outputs and manifests
// stay byte-identical across reruns.
void write_manifest(const std::string& out_path, const std::string& command,
                    const json& effective_config, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["config"] = effective_config;
  m["config_hash"] = fnv1a(effective_config.dump());
  write_file(out_path + ".manifest.json", m.dump(2) + "\n");
  json t;
  t["written_at"] = static_cast<long long>(::time(nullptr));
  write_file(out_path + ".manifest.time.json", t.dump(2) + "\n");
}

struct CommonOpts {
  std::string config_path;
  std::string lexicon_path = "data/lexicon.json";
  std::uint64_t seed = 7;
};

// Model/featurizer knobs shared by train/ablate/demo; file values are
// applied first, then explicit flags override.
struct ModelOpts {
  ModelConfig model;
  PlantedConfig planted;
  std::string variant = "comb";
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw data_error("config file " + path + ": invalid JSON");
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_config(const json& j, CommonOpts& common, ModelOpts& mo, ToyConfig& toy,
                  GenConfig& gen) {
  maybe(j, "lexicon", common.lexicon_path);
  maybe(j, "seed", common.seed);
  maybe(j, "image_dim", mo.model.image_dim);
  maybe(j, "text_dim", mo.model.text_dim);
  maybe(j, "proj_dim", mo.model.proj_dim);
  maybe(j, "hidden_dim", mo.model.hidden_dim);
  maybe(j, "dropout", mo.model.dropout);
  maybe(j, "tau", mo.model.tau);
  maybe(j, "epochs", mo.model.epochs);
  maybe(j, "batch_size", mo.model.batch_size);
  maybe(j, "max_lr", mo.model.max_lr);
  maybe(j, "weight_decay", mo.model.weight_decay);
  maybe(j, "warmup_steps", mo.model.warmup_steps);
  maybe(j, "variant", mo.variant);
  maybe(j, "noise_sigma", mo.planted.noise_sigma);
  maybe(j, "box_signal", mo.planted.box_signal);
  maybe(j, "toy_images", toy.n_images);
  maybe(j, "n_relocate", gen.n_relocate);
  maybe(j, "n_substitute", gen.n_substitute);
}

json effective_config_json(const CommonOpts& common, const ModelOpts& mo,
                           const ToyConfig& toy, const GenConfig& gen) {
  json j;
  j["lexicon"] = common.lexicon_path;
  j["seed"] = common.seed;
  j["image_dim"] = mo.model.image_dim;
  j["text_dim"] = mo.model.text_dim;
  j["proj_dim"] = mo.model.proj_dim;
  j["hidden_dim"] = mo.model.hidden_dim;
  j["dropout"] = mo.model.dropout;
  j["tau"] = mo.model.tau;
  j["epochs"] = mo.model.epochs;
  j["batch_size"] = mo.model.batch_size;
  j["max_lr"] = mo.model.max_lr;
  j["weight_decay"] = mo.model.weight_decay;
  j["warmup_steps"] = static_cast<long long>(mo.model.warmup_steps);
  j["variant"] = mo.variant;
  j["noise_sigma"] = mo.planted.noise_sigma;
  j["box_signal"] = mo.planted.box_signal;
  j["toy_images"] = toy.n_images;
  j["n_relocate"] = gen.n_relocate;
  j["n_substitute"] = gen.n_substitute;
  return j;
}

void add_model_flags(CLI::App* cmd, ModelOpts& mo) {
  cmd->add_option("--image-dim", mo.model.image_dim);
  cmd->add_option("--text-dim", mo.model.text_dim);
  cmd->add_option("--proj-dim", mo.model.proj_dim);
  cmd->add_option("--hidden-dim", mo.model.hidden_dim);
  cmd->add_option("--dropout", mo.model.dropout);
  cmd->add_option("--tau", mo.model.tau);
  cmd->add_option("--epochs", mo.model.epochs);
  cmd->add_option("--batch-size", mo.model.batch_size);
  cmd->add_option("--max-lr", mo.model.max_lr);
  cmd->add_option("--weight-decay", mo.model.weight_decay);
  cmd->add_option("--warmup", mo.model.warmup_steps);
  cmd->add_option("--variant", mo.variant)
      ->check(CLI::IsMember({"comb", "bce_encoder", "frozen_encoder", "dual_head"}));
  cmd->add_option("--noise-sigma", mo.planted.noise_sigma);
  cmd->add_option("--box-signal", mo.planted.box_signal);
}

PlantedConfig planted_for(const ModelCheckpoint& ckpt, const PlantedConfig& base) {
  PlantedConfig pc = base;
  pc.image_dim = ckpt.config.image_dim;
  pc.text_dim = ckpt.config.text_dim;
  pc.seed = ckpt.seed;
  return pc;
}

json metrics_json(const Metrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["miou"] = m.miou;
  j["miou_pairs"] = m.miou_pairs;
  j["miou_excluded"] = m.miou_excluded;
  j["n_pairs"] = m.n_pairs;
  json roc = json::array();
  for (auto& [fpr, tpr] : m.roc) roc.push_back(json{{"fpr", fpr}, {"tpr", tpr}});
  j["roc"] = roc;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"anatomically grounded fact checking of radiology findings"};
  app.require_subcommand(1);

  CommonOpts common;
  ModelOpts mo;
  ToyConfig toy;
  GenConfig gen;
  app.add_option("--config", common.config_path, "JSON config file; flags override");
  app.add_option("--lexicon", common.lexicon_path);
  app.add_option("--seed", common.seed);

  // lexicon validate
  auto* lex_cmd = app.add_subcommand("lexicon", "lexicon utilities");
  std::string lex_path;
  auto* lex_validate = lex_cmd->add_subcommand("validate", "load and report a lexicon");
  lex_validate->add_option("path", lex_path)->required();

  // atlas ingest
  auto* atlas_cmd = app.add_subcommand("atlas", "anatomy atlas utilities");
  std::string atlas_in, atlas_out = "atlas.json";
  auto* atlas_ingest = atlas_cmd->add_subcommand("ingest", "normalize an annotation file");
  atlas_ingest->add_option("path", atlas_in)->required();
  atlas_ingest->add_option("--out", atlas_out);

  // synth generate
  auto* synth_cmd = app.add_subcommand("synth", "synthetic pair generation");
  std::string synth_ann, synth_reports, synth_out = "samples.jsonl";
  auto* synth_gen = synth_cmd->add_subcommand("generate", "build the labeled pair set");
  synth_gen->add_option("--annotations", synth_ann)->required();
  synth_gen->add_option("--reports", synth_reports)->required();
  synth_gen->add_option("--out", synth_out);
  synth_gen->add_option("--n-relocate", gen.n_relocate);
  synth_gen->add_option("--n-substitute", gen.n_substitute);

  // model train / eval / ablate
  auto* model_cmd = app.add_subcommand("model", "verifier training and evaluation");
  std::string train_samples, train_out = "checkpoint.json";
  auto* model_train = model_cmd->add_subcommand("train", "train the verifier");
  model_train->add_option("--samples", train_samples)->required();
  model_train->add_option("--out", train_out);
  add_model_flags(model_train, mo);

  std::string eval_samples_path, eval_ckpt, eval_out = "metrics.json";
  auto* model_eval = model_cmd->add_subcommand("eval", "evaluate a checkpoint");
  model_eval->add_option("--samples", eval_samples_path)->required();
  model_eval->add_option("--checkpoint", eval_ckpt)->required();
  model_eval->add_option("--out", eval_out);

  std::string ablate_samples, ablate_out = "ablation.json";
  int ablate_seeds = 3;
  auto* model_ablate = model_cmd->add_subcommand("ablate", "compare loss variants");
  model_ablate->add_option("--samples", ablate_samples)->required();
  model_ablate->add_option("--out", ablate_out);
  model_ablate->add_option("--seeds", ablate_seeds);
  add_model_flags(model_ablate, mo);

  // check / correct
  std::string chk_report, chk_image, chk_ckpt, chk_ann, chk_out;
  std::string feat_samples, feat_image_store, feat_finding_store;
  bool rewriter_required = false;
  auto add_featurizer_opts = [&](CLI::App* c) {
    c->add_option("--samples", feat_samples,
                  "sample file the planted featurizer was built over");
    c->add_option("--image-store", feat_image_store, "precomputed image embeddings");
    c->add_option("--finding-store", feat_finding_store, "precomputed finding embeddings");
    c->add_option("--noise-sigma", mo.planted.noise_sigma);
    c->add_option("--box-signal", mo.planted.box_signal);
  };
  auto add_check_opts = [&](CLI::App* c) {
    c->add_option("--report", chk_report, "report text file")->required();
    c->add_option("--image-id", chk_image)->required();
    c->add_option("--checkpoint", chk_ckpt)->required();
    c->add_option("--annotations", chk_ann)->required();
    c->add_option("--out", chk_out);
    add_featurizer_opts(c);
  };
  auto* check_cmd = app.add_subcommand("check", "score one report");
  add_check_opts(check_cmd);
  auto* correct_cmd = app.add_subcommand("correct", "score and correct one report");
  add_check_opts(correct_cmd);
  correct_cmd->add_flag("--require-rewriter", rewriter_required,
                        "fail instead of falling back offline");

  // eval run
  std::string run_corpus, run_ckpt, run_ann, run_out = "eval-out";
  auto* eval_cmd = app.add_subcommand("eval", "report-quality assessment");
  auto* eval_run = eval_cmd->add_subcommand("run", "assess a corpus");
  eval_run->add_option("--corpus", run_corpus)->required();
  eval_run->add_option("--checkpoint", run_ckpt)->required();
  eval_run->add_option("--annotations", run_ann)->required();
  eval_run->add_option("--out", run_out);
  add_featurizer_opts(eval_run);

  // demo
  std::string demo_out = "demo-out";
  auto* demo = app.add_subcommand("demo", "full toy pipeline end to end");
  demo->add_option("--out", demo_out);
  demo->add_option("--toy-images", toy.n_images);
  add_model_flags(demo, mo);

  // Demo defaults lean small; the acceptance-scale run overrides them.
  toy.n_images = 200;
  mo.model.epochs = 40;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  // File config first, then re-apply flags by re-parsing.
  if (!common.config_path.empty()) {
    json file_cfg = load_config_file(common.config_path);
    CommonOpts c2 = common;
    ModelOpts m2;
    ToyConfig t2 = toy;
    GenConfig g2 = gen;
    apply_config(file_cfg, c2, m2, t2, g2);
    // Flags already parsed win: copy file values only where the flag was
    // not given.
    auto keep = [&](const CLI::App* cmd, const char* flag) {
      const CLI::Option* o = cmd->get_option_no_throw(flag);
      return o != nullptr && o->count() > 0;
    };
    CLI::App* sub = app.get_subcommands().front();
    CLI::App* leaf = sub->get_subcommands().empty() ? sub : sub->get_subcommands().front();
    if (!keep(&app, "--seed")) common.seed = c2.seed;
    if (!keep(&app, "--lexicon")) common.lexicon_path = c2.lexicon_path;
    auto merge = [&](const char* flag, auto ModelConfig::* f) {
      if (!keep(leaf, flag)) mo.model.*f = m2.model.*f;
    };
    merge("--image-dim", &ModelConfig::image_dim);
    merge("--text-dim", &ModelConfig::text_dim);
    merge("--proj-dim", &ModelConfig::proj_dim);
    merge("--hidden-dim", &ModelConfig::hidden_dim);
    merge("--dropout", &ModelConfig::dropout);
    merge("--tau", &ModelConfig::tau);
    merge("--epochs", &ModelConfig::epochs);
    merge("--batch-size", &ModelConfig::batch_size);
    merge("--max-lr", &ModelConfig::max_lr);
    merge("--weight-decay", &ModelConfig::weight_decay);
    merge("--warmup", &ModelConfig::warmup_steps);
    if (!keep(leaf, "--variant")) mo.variant = m2.variant;
    if (!keep(leaf, "--noise-sigma")) mo.planted.noise_sigma = m2.planted.noise_sigma;
    if (!keep(leaf, "--box-signal")) mo.planted.box_signal = m2.planted.box_signal;
    if (!keep(leaf, "--toy-images")) toy.n_images = t2.n_images;
    if (!keep(leaf, "--n-relocate")) gen.n_relocate = g2.n_relocate;
    if (!keep(leaf, "--n-substitute")) gen.n_substitute = g2.n_substitute;
  }
  mo.model.variant = variant_from_string(mo.variant);
  mo.planted.image_dim = mo.model.image_dim;
  mo.planted.text_dim = mo.model.text_dim;
  json cfg_echo = effective_config_json(common, mo, toy, gen);

  Lexicon lexicon = load_lexicon(common.lexicon_path);

  if (*lex_validate) {
    Lexicon l = load_lexicon(lex_path);
    json j;
    j["findings"] = l.findings.size();
    j["regions"] = l.regions.size();
    j["negations"] = l.negations.size();
    int synonyms = 0;
    for (const auto& f : l.findings) synonyms += static_cast<int>(f.synonyms.size());
    j["finding_synonyms"] = synonyms;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (*atlas_ingest) {
    RegionMap rm = ingest_annotations(atlas_in, lexicon);
    json j = json::object();
    for (const auto& [id, regions] : rm.images) {
      json r = json::object();
      for (const auto& [name, b] : regions)
        r[name] = json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
      j[id] = std::move(r);
    }
    write_file(atlas_out, j.dump(2) + "\n");
    write_manifest(atlas_out, "atlas ingest", cfg_echo, common.seed);
    std::cout << "ingested " << rm.images.size() << " images -> " << atlas_out << "\n";
    return 0;
  }

  if (*synth_gen) {
    RegionMap rm = ingest_annotations(synth_ann, lexicon);
    auto reports = load_reports(synth_reports);
    std::vector<Sample> samples = build_samples(reports, lexicon, rm);
    LocationPool pools = build_pools(samples);
    std::vector<std::string> vocab;
    for (const auto& f : lexicon.findings) vocab.push_back(f.canonical);
    GenReport rep = generate_dataset(samples, pools, vocab, gen, common.seed);
    save_samples(samples, synth_out);
    write_manifest(synth_out, "synth generate", cfg_echo, common.seed);
    json j = {{"samples", samples.size()},
              {"reversals", rep.reversals},
              {"relocations", rep.relocations},
              {"substitutions", rep.substitutions},
              {"skipped_relocations", rep.skipped_relocations},
              {"skipped_substitutions", rep.skipped_substitutions}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (*model_train) {
    std::vector<Sample> samples = load_samples(train_samples);
    PlantedConfig pc = mo.planted;
    pc.seed = common.seed;
    PlantedFeaturizer feat(pc, samples);
    ModelCheckpoint ckpt = train(samples, feat, mo.model, common.seed);
    save_checkpoint(ckpt, train_out);
    write_manifest(train_out, "model train", cfg_echo, common.seed);
    std::cout << "trained " << ckpt.step << " steps -> " << train_out << "\n";
    return 0;
  }

  if (*model_eval) {
    std::vector<Sample> samples = load_samples(eval_samples_path);
    ModelCheckpoint ckpt = load_checkpoint(eval_ckpt);
    PlantedFeaturizer feat(planted_for(ckpt, mo.planted), samples);
    Metrics m = evaluate(ckpt, feat, samples);
    write_file(eval_out, metrics_json(m).dump(2) + "\n");
    write_manifest(eval_out, "model eval", cfg_echo, common.seed);
    std::cout << metrics_json(m).dump(2) << "\n";
    return 0;
  }

  if (*model_ablate) {
    std::vector<Sample> samples = load_samples(ablate_samples);
    json table = json::array();
    for (Variant v : {Variant::comb, Variant::bce_encoder, Variant::frozen_encoder,
                      Variant::dual_head}) {
      for (int s = 0; s < ablate_seeds; ++s) {
        std::uint64_t seed = common.seed + s;
        PlantedConfig pc = mo.planted;
        pc.seed = seed;
        PlantedFeaturizer feat(pc, samples);
        ModelConfig cfg = mo.model;
        cfg.variant = v;
        ModelCheckpoint ckpt = train(samples, feat, cfg, seed);
        Metrics m = evaluate(ckpt, feat, samples);
        table.push_back(json{{"variant", variant_to_string(v)},
                             {"seed", seed},
                             {"accuracy", m.accuracy},
                             {"miou", m.miou}});
      }
    }
    write_file(ablate_out, table.dump(2) + "\n");
    write_manifest(ablate_out, "model ablate", cfg_echo, common.seed);
    std::cout << table.dump(2) << "\n";
    return 0;
  }

  // The planted featurizer must be rebuilt over the same samples it was
  // trained with; precomputed stores are the alternative.
  auto make_featurizer = [&](const ModelCheckpoint& ckpt) -> std::unique_ptr<Featurizer> {
    if (!feat_image_store.empty() || !feat_finding_store.empty()) {
      if (feat_image_store.empty() || feat_finding_store.empty())
        throw usage_error("--image-store and --finding-store go together");
      return std::make_unique<PrecomputedFeaturizer>(feat_image_store, feat_finding_store);
    }
    if (feat_samples.empty())
      throw usage_error("need --samples or --image-store/--finding-store");
    return std::make_unique<PlantedFeaturizer>(planted_for(ckpt, mo.planted),
                                               load_samples(feat_samples));
  };

  if (*check_cmd || *correct_cmd) {
    RegionMap rm = ingest_annotations(chk_ann, lexicon);
    ModelCheckpoint ckpt = load_checkpoint(chk_ckpt);
    std::string text = read_file(chk_report);
    auto feat = make_featurizer(ckpt);
    FCReport rep = check_report(text, chk_image, ckpt, *feat, lexicon, rm);
    if (*correct_cmd) {
      auto rewriter = make_rewriter_from_env(rewriter_required);
      rep.corrected_text = correct_report(text, rep, *rewriter);
    }
    std::string out = fc_report_to_json(rep);
    if (!chk_out.empty()) {
      write_file(chk_out, out + "\n");
      write_manifest(chk_out, *correct_cmd ? "correct" : "check", cfg_echo, common.seed);
    }
    std::cout << out << "\n";
    return 0;
  }

  if (*eval_run) {
    RegionMap rm = ingest_annotations(run_ann, lexicon);
    ModelCheckpoint ckpt = load_checkpoint(run_ckpt);
    auto corpus = load_corpus(run_corpus);
    auto feat = make_featurizer(ckpt);
    auto rewriter = make_rewriter_from_env(false);
    EvalRun result = run_assessment(corpus, ckpt, *feat, lexicon, rm, *rewriter);
    fs::create_directories(run_out);
    write_file(run_out + "/eval.json", eval_run_to_json(result));
    write_file(run_out + "/eval.csv", eval_run_to_csv(result));
    write_manifest(run_out + "/eval.json", "eval run", cfg_echo, common.seed);
    std::cout << "assessed " << result.reports.size() << " reports -> " << run_out << "\n";
    return 0;
  }

  if (*demo) {
    DriverConfig dc;
    dc.seed = common.seed;
    dc.toy = toy;
    dc.gen = gen;
    dc.model = mo.model;
    dc.model.image_dim = mo.planted.image_dim;
    dc.model.text_dim = mo.planted.text_dim;
    dc.planted = mo.planted;
    DriverResult r = run_toy_pipeline(dc, lexicon, demo_out);
    write_manifest(demo_out + "/metrics.json", "demo", cfg_echo, common.seed);
    std::cout << metrics_to_json(r) << "\n";
    return 0;
  }

  std::cerr << "no subcommand selected\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::usage: return 1;
      case ErrorKind::data: return 2;
      case ErrorKind::numerical: return 3;
      case ErrorKind::rewriter: return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
