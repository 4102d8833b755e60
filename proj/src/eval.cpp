#include "fcrx/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "fcrx/error.hpp"
#include "fcrx/synth.hpp"

namespace fcrx {

using json = nlohmann::ordered_json;

std::vector<std::string> bleu_tokenize(const std::string& text) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += std::tolower(static_cast<unsigned char>(ch));
    } else if (!cur.empty()) {
      toks.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

double bleu(const std::string& candidate, const std::string& reference, int max_n) {
  std::vector<std::string> c = bleu_tokenize(candidate);
  std::vector<std::string> r = bleu_tokenize(reference);
  if (c.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    long total = static_cast<long>(c.size()) - n + 1;
    if (total <= 0) {
      if (n == 1) return 0.0;
      continue;  // no n-grams of this order to score
    }
    std::map<std::vector<std::string>, long> ref_counts;
    for (long i = 0; i + n <= static_cast<long>(r.size()); ++i)
      ++ref_counts[std::vector<std::string>(r.begin() + i, r.begin() + i + n)];
    std::map<std::vector<std::string>, long> cand_counts;
    for (long i = 0; i + n <= static_cast<long>(c.size()); ++i)
      ++cand_counts[std::vector<std::string>(c.begin() + i, c.begin() + i + n)];
    long matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (matched == 0) {
      if (n == 1) return 0.0;
      p = 1.0 / static_cast<double>(total + 1);  // add-one smoothing
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    log_sum += std::log(p) / max_n;
  }
  double bp = 1.0;
  if (c.size() < r.size())
    bp = std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()));
  return bp * std::exp(log_sum);
}

std::vector<Split> split_dataset(int n, std::array<double, 3> ratios, int folds,
                                 std::uint64_t seed) {
  if (n <= 0) throw data_error("cannot split an empty dataset");
  if (folds < 1) throw usage_error("folds must be >= 1");
  double rsum = ratios[0] + ratios[1] + ratios[2];
  if (rsum <= 0.0 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0)
    throw usage_error("split ratios must be non-negative with positive sum");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(stream_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Split> out;
  if (folds == 1) {
    int n_val = static_cast<int>(std::floor(n * ratios[1] / rsum));
    int n_test = static_cast<int>(std::floor(n * ratios[2] / rsum));
    int n_train = n - n_val - n_test;  // remainder goes to train
    Split s;
    s.train.assign(order.begin(), order.begin() + n_train);
    s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    s.test.assign(order.begin() + n_train + n_val, order.end());
    out.push_back(std::move(s));
    return out;
  }

  // k-fold mode: test blocks are the k-th cuts of the shuffled order, so
  // they are disjoint across folds (the remainder n % folds is left to the
  // training side).  Validation takes the val-ratio share following the
  // test block on the circular order.
  int block = n / folds;
  if (block == 0) throw data_error("more folds than samples");
  int n_val = static_cast<int>(std::floor(n * ratios[1] / rsum));
  for (int k = 0; k < folds; ++k) {
    Split s;
    int t0 = k * block;
    std::vector<bool> used(n, false);
    for (int i = t0; i < t0 + block; ++i) {
      s.test.push_back(order[i]);
      used[i] = true;
    }
    for (int i = 0; i < n_val; ++i) {
      int idx = (t0 + block + i) % n;
      s.val.push_back(order[idx]);
      used[idx] = true;
    }
    for (int i = 0; i < n; ++i)
      if (!used[i]) s.train.push_back(order[i]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CorpusEntry> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open corpus file " + path);
  std::vector<CorpusEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw data_error("corpus line " + std::to_string(lineno) + ": invalid JSON");
    CorpusEntry e;
    try {
      e.image_id = j.at("image_id").get<std::string>();
      e.automated_report = j.at("automated_report").get<std::string>();
      e.ground_truth_report = j.at("ground_truth_report").get<std::string>();
    } catch (const json::exception& ex) {
      throw data_error("corpus line " + std::to_string(lineno) + ": " + ex.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

double external_metric(const std::string& name, const std::string&, const std::string&) {
  throw data_error("external model not configured: " + name);
}

namespace {

std::vector<GroundTruthPair> ground_truth_pairs(const std::string& report,
                                                const std::string& image_id,
                                                const Lexicon& lexicon,
                                                const RegionMap& region_map) {
  std::vector<GroundTruthPair> out;
  ExtractionResult ex = extract_ffl(report, lexicon);
  for (const FFLPattern& p : ex.patterns) {
    GroundTruthPair g;
    g.pattern = p;
    g.box = indicated_location(p, image_id, region_map, lexicon).box;
    out.push_back(std::move(g));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalRun run_assessment(const std::vector<CorpusEntry>& corpus,
                       const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                       const Lexicon& lexicon, const RegionMap& region_map,
                       Rewriter& rewriter, const std::string& corpus_id) {
  EvalRun run;
  run.corpus_id = corpus_id;
  std::vector<double> ag, cg, fc_ap, fc_ag, fc_cp, fc_cg, conc;
  for (const CorpusEntry& e : corpus) {
    ReportAssessment ra;
    ra.image_id = e.image_id;
    FCReport rep = check_report(e.automated_report, e.image_id, ckpt, featurizer,
                                lexicon, region_map);
    ra.fc_ap = rep.fc;
    std::vector<GroundTruthPair> gt =
        ground_truth_pairs(e.ground_truth_report, e.image_id, lexicon, region_map);
    ra.fc_ag = fc_score_against_ground_truth(rep.records, gt);
    ra.corrected_report = correct_report(e.automated_report, rep, rewriter);
    ra.bleu_ag = bleu(e.automated_report, e.ground_truth_report);
    ra.bleu_cg = bleu(ra.corrected_report, e.ground_truth_report);
    FCReport crep = check_report(ra.corrected_report, e.image_id, ckpt, featurizer,
                                 lexicon, region_map);
    ra.fc_cp = crep.fc;
    ra.fc_cg = fc_score_against_ground_truth(crep.records, gt);

    ag.push_back(ra.bleu_ag);
    cg.push_back(ra.bleu_cg);
    if (ra.fc_ap) fc_ap.push_back(*ra.fc_ap);
    if (ra.fc_ag) fc_ag.push_back(*ra.fc_ag);
    if (ra.fc_cp) fc_cp.push_back(*ra.fc_cp);
    if (ra.fc_cg) fc_cg.push_back(*ra.fc_cg);
    if (ra.fc_ap && ra.fc_ag) conc.push_back(std::abs(*ra.fc_ap - *ra.fc_ag));
    run.reports.push_back(std::move(ra));
  }
  run.mean_bleu_ag = mean_of(ag);
  run.mean_bleu_cg = mean_of(cg);
  run.mean_fc_ap = mean_of(fc_ap);
  run.mean_fc_ag = mean_of(fc_ag);
  run.mean_fc_cp = mean_of(fc_cp);
  run.mean_fc_cg = mean_of(fc_cg);
  run.concordance = mean_of(conc);

  // Average relative improvement over the (·,G) metrics with a positive
  // pre-correction mean.
  std::vector<double> improvements;
  if (run.mean_bleu_ag > 0.0)
    improvements.push_back((run.mean_bleu_cg - run.mean_bleu_ag) / run.mean_bleu_ag);
  if (run.mean_fc_ag > 0.0 && !fc_cg.empty())
    improvements.push_back((run.mean_fc_cg - run.mean_fc_ag) / run.mean_fc_ag);
  run.improvement = mean_of(improvements);
  return run;
}

static json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::string eval_run_to_json(const EvalRun& run) {
  json j;
  j["corpus_id"] = run.corpus_id;
  j["mean"] = {{"bleu_ag", run.mean_bleu_ag}, {"bleu_cg", run.mean_bleu_cg},
               {"fc_ap", run.mean_fc_ap},     {"fc_ag", run.mean_fc_ag},
               {"fc_cp", run.mean_fc_cp},     {"fc_cg", run.mean_fc_cg},
               {"concordance", run.concordance}, {"improvement", run.improvement}};
  json reports = json::array();
  for (const ReportAssessment& r : run.reports) {
    reports.push_back(json{{"image_id", r.image_id},
                           {"bleu_ag", r.bleu_ag},
                           {"bleu_cg", r.bleu_cg},
                           {"fc_ap", opt_json(r.fc_ap)},
                           {"fc_ag", opt_json(r.fc_ag)},
                           {"fc_cp", opt_json(r.fc_cp)},
                           {"fc_cg", opt_json(r.fc_cg)},
                           {"corrected_report", r.corrected_report}});
  }
  j["reports"] = std::move(reports);
  return j.dump(2);
}

std::string eval_run_to_csv(const EvalRun& run) {
  std::ostringstream out;
  out << "image_id,bleu_ag,bleu_cg,fc_ap,fc_ag,fc_cp,fc_cg\n";
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string();
    std::ostringstream s;
    s << *v;
    return s.str();
  };
  for (const ReportAssessment& r : run.reports) {
    out << r.image_id << ',' << r.bleu_ag << ',' << r.bleu_cg << ',' << cell(r.fc_ap)
        << ',' << cell(r.fc_ag) << ',' << cell(r.fc_cp) << ',' << cell(r.fc_cg) << '\n';
  }
  return out.str();
}

}  // namespace fcrx
