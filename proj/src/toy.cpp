#include "fcrx/toy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include "json.hpp"

#include "fcrx/error.hpp"

namespace fcrx {

using nlohmann::ordered_json;

namespace {

struct RegionGeom {
  const char* name;
  double x, y, w, h;  // normalized canonical placement
};

// A plausible frontal-view layout; per-image jitter is applied on top.
const RegionGeom kGeometry[] = {
    {"right lung", 0.08, 0.15, 0.35, 0.65},
    {"left lung", 0.57, 0.15, 0.35, 0.65},
    {"right upper lung zone", 0.08, 0.15, 0.35, 0.22},
    {"left upper lung zone", 0.57, 0.15, 0.35, 0.22},
    {"right mid lung zone", 0.08, 0.37, 0.35, 0.22},
    {"left mid lung zone", 0.57, 0.37, 0.35, 0.22},
    {"right lower lung zone", 0.08, 0.59, 0.35, 0.21},
    {"left lower lung zone", 0.57, 0.59, 0.35, 0.21},
    {"right apical zone", 0.10, 0.12, 0.28, 0.10},
    {"left apical zone", 0.62, 0.12, 0.28, 0.10},
    {"right hilar structures", 0.33, 0.35, 0.14, 0.18},
    {"left hilar structures", 0.53, 0.35, 0.14, 0.18},
    {"right costophrenic angle", 0.08, 0.70, 0.12, 0.10},
    {"left costophrenic angle", 0.80, 0.70, 0.12, 0.10},
    {"right hemidiaphragm", 0.08, 0.72, 0.35, 0.10},
    {"left hemidiaphragm", 0.57, 0.72, 0.35, 0.10},
    {"right clavicle", 0.05, 0.08, 0.38, 0.06},
    {"left clavicle", 0.57, 0.08, 0.38, 0.06},
    {"right ribs", 0.05, 0.12, 0.40, 0.68},
    {"left ribs", 0.55, 0.12, 0.40, 0.68},
    {"right shoulder", 0.00, 0.05, 0.15, 0.12},
    {"left shoulder", 0.85, 0.05, 0.15, 0.12},
    {"trachea", 0.46, 0.08, 0.08, 0.15},
    {"carina", 0.45, 0.23, 0.10, 0.06},
    {"spine", 0.44, 0.05, 0.12, 0.85},
    {"mediastinum", 0.35, 0.20, 0.30, 0.50},
    {"upper mediastinum", 0.38, 0.10, 0.24, 0.18},
    {"cardiac silhouette", 0.35, 0.45, 0.30, 0.28},
    {"right atrium", 0.38, 0.52, 0.10, 0.12},
    {"cavoatrial junction", 0.38, 0.48, 0.10, 0.08},
    {"superior vena cava", 0.40, 0.25, 0.08, 0.20},
    {"aortic arch", 0.42, 0.28, 0.14, 0.10},
    {"descending aorta", 0.48, 0.35, 0.08, 0.40},
    {"sternum", 0.44, 0.30, 0.12, 0.45},
    {"neck", 0.35, 0.00, 0.30, 0.10},
    {"abdomen", 0.15, 0.82, 0.70, 0.18},
};

struct Template {
  const char* core;
  bool sided;                // renders with a Left/Right qualifier or zone
  const char* present_fmt;   // "%s" is replaced by the chosen side
};

// Sided findings alternate between two locations across the dataset, which
// makes their relocated fakes input-identical to the real pair; they are
// deliberately a minority of present mentions.
const Template kTemplates[] = {
    {"cardiomegaly", false, "Cardiomegaly is observed."},
    {"aortic enlargement", false, "Aortic enlargement is noted."},
    {"mediastinal shift", false, "Mediastinal shift is observed."},
    {"hiatal hernia", false, "Hiatal hernia is noted."},
    {"edema", false, "Edema is observed."},
    {"pneumonia", false, "Pneumonia is observed."},
    {"pleural effusion", true, "%s pleural effusion found."},
    {"pneumothorax", true, "%s pneumothorax is seen."},
    {"consolidation", true, "Consolidation is seen in the %s lower lung zone."},
    {"atelectasis", true, "Atelectasis is noted in the %s mid lung zone."},
    {"nodule", true, "Nodule is identified in the %s upper lung zone."},
    {"lung opacity", true, "Lung opacity is seen in the %s lower lung zone."},
};

std::string render_present(const Template& t, bool left) {
  std::string s = t.present_fmt;
  size_t pos = s.find("%s");
  if (pos == std::string::npos) return s;
  std::string side = left ? "left" : "right";
  if (pos == 0) side[0] = std::toupper(static_cast<unsigned char>(side[0]));
  s.replace(pos, 2, side);
  return s;
}

std::string render_negation(const std::vector<std::string>& cores) {
  std::string s = "No ";
  for (size_t i = 0; i < cores.size(); ++i) {
    if (i > 0) s += (i + 1 == cores.size()) ? " or " : ", ";
    s += cores[i];
  }
  s += '.';
  return s;
}

}  // namespace

const std::vector<std::string>& toy_findings() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Template& t : kTemplates) v.emplace_back(t.core);
    return v;
  }();
  return names;
}

ToyData generate_toy(const ToyConfig& config, const Lexicon& lexicon) {
  for (const Template& t : kTemplates)
    if (!lexicon.finding_by_canonical.count(t.core))
      throw data_error(std::string("toy template finding not in lexicon: ") + t.core);

  ToyData out;
  const int n_templates = static_cast<int>(std::size(kTemplates));
  for (int i = 0; i < config.n_images; ++i) {
    std::string image_id = "toy-" + std::to_string(i);
    std::mt19937_64 rng(stream_seed(config.seed, "toy:" + image_id));
    std::uniform_real_distribution<double> jit(-config.jitter, config.jitter);

    // Jittered anatomy, written in pixel space for the ingest path.
    const double kPx = 1000.0;
    ordered_json rec;
    rec["image_id"] = image_id;
    rec["width"] = kPx;
    rec["height"] = kPx;
    ordered_json regions = ordered_json::array();
    for (const RegionGeom& g : kGeometry) {
      double x = std::clamp(g.x + jit(rng), 0.0, 1.0 - g.w);
      double y = std::clamp(g.y + jit(rng), 0.0, 1.0 - g.h);
      regions.push_back(ordered_json{{"name", g.name},
                                     {"x", x * kPx},
                                     {"y", y * kPx},
                                     {"w", g.w * kPx},
                                     {"h", g.h * kPx}});
    }
    rec["regions"] = std::move(regions);
    out.annotation_lines.push_back(rec.dump());

    // Pick present findings (sided ones down-weighted), then absent ones.
    std::vector<int> weights;
    for (const Template& t : kTemplates)
      weights.push_back(t.sided ? config.bimodal_weight : config.unimodal_weight);
    std::uniform_int_distribution<int> n_present_dist(config.min_present,
                                                      config.max_present);
    std::uniform_int_distribution<int> n_absent_dist(config.min_absent,
                                                     config.max_absent);
    int n_present = n_present_dist(rng);
    int n_absent = n_absent_dist(rng);

    std::vector<int> present, absent;
    {
      std::vector<int> avail(n_templates);
      for (int k = 0; k < n_templates; ++k) avail[k] = k;
      for (int k = 0; k < n_present && !avail.empty(); ++k) {
        std::vector<int> w;
        for (int idx : avail) w.push_back(weights[idx]);
        std::discrete_distribution<int> pick(w.begin(), w.end());
        int at = pick(rng);
        present.push_back(avail[at]);
        avail.erase(avail.begin() + at);
      }
      std::shuffle(avail.begin(), avail.end(), rng);
      for (int k = 0; k < n_absent && k < static_cast<int>(avail.size()); ++k)
        absent.push_back(avail[k]);
      std::sort(absent.begin(), absent.end());
    }

    std::string gt;
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<bool> present_left(present.size(), false);
    for (size_t k = 0; k < present.size(); ++k) {
      present_left[k] = coin(rng) == 1;
      if (!gt.empty()) gt += ' ';
      gt += render_present(kTemplates[present[k]], present_left[k]);
    }
    std::vector<std::string> absent_cores;
    for (int idx : absent) absent_cores.push_back(kTemplates[idx].core);
    if (!absent_cores.empty()) {
      if (!gt.empty()) gt += ' ';
      gt += render_negation(absent_cores);
    }

    // Automated report: the ground truth plus hallucinated claims, drawn
    // mostly from the explicitly negated findings so the planted error is
    // a straight contradiction.
    std::string automated = gt;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> halluc_pool = absent;
    for (int k = 0; k < n_templates; ++k) {
      bool mentioned = std::count(present.begin(), present.end(), k) ||
                       std::count(absent.begin(), absent.end(), k);
      if (!mentioned && unit(rng) < 0.15) halluc_pool.push_back(k);
    }
    int n_halluc = 0;
    if (unit(rng) < config.p_hallucinate) n_halluc = 1;
    if (n_halluc == 1 && unit(rng) < config.p_second_hallucination) n_halluc = 2;
    std::shuffle(halluc_pool.begin(), halluc_pool.end(), rng);
    for (int k = 0; k < n_halluc && k < static_cast<int>(halluc_pool.size()); ++k) {
      automated += ' ';
      automated += render_present(kTemplates[halluc_pool[k]], coin(rng) == 1);
    }

    out.reports.push_back(ToyReport{image_id, gt, automated});
  }
  return out;
}

void write_toy_annotations(const ToyData& data, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw data_error("cannot write " + path);
  for (const std::string& line : data.annotation_lines) outf << line << '\n';
}

void write_toy_corpus(const ToyData& data, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw data_error("cannot write " + path);
  for (const ToyReport& r : data.reports) {
    ordered_json j{{"image_id", r.image_id},
                   {"automated_report", r.automated},
                   {"ground_truth_report", r.ground_truth}};
    outf << j.dump() << '\n';
  }
}

void write_toy_reports(const ToyData& data, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw data_error("cannot write " + path);
  for (const ToyReport& r : data.reports) {
    ordered_json j{{"image_id", r.image_id}, {"report", r.ground_truth}};
    outf << j.dump() << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> load_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open reports file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("image_id") || !j.contains("report"))
      throw data_error("reports line " + std::to_string(lineno) +
                       ": expected {image_id, report}");
    out.emplace_back(j["image_id"].get<std::string>(), j["report"].get<std::string>());
  }
  return out;
}

std::vector<Sample> build_samples(
    const std::vector<std::pair<std::string, std::string>>& reports,
    const Lexicon& lexicon, const RegionMap& region_map) {
  std::vector<Sample> samples;
  for (const auto& [image_id, text] : reports) {
    Sample s;
    s.image_id = image_id;
    ExtractionResult ex = extract_ffl(text, lexicon);
    for (const FFLPattern& p : ex.patterns) {
      FLPair pair;
      pair.type = p.type;
      pair.present = p.present;
      pair.core = p.core;
      if (p.present)
        pair.location = indicated_location(p, image_id, region_map, lexicon).box;
      bool dup = std::any_of(s.real_pairs.begin(), s.real_pairs.end(),
                             [&](const FLPair& q) { return q.same_content(pair); });
      if (!dup) s.real_pairs.push_back(std::move(pair));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace fcrx
