#include "fcrx/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>

#include "json.hpp"

#include "fcrx/error.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>

namespace fcrx {

using json = nlohmann::ordered_json;

FCReport check_report(const std::string& report_text, const std::string& image_id,
                      const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                      const Lexicon& lexicon, const RegionMap& region_map) {
  FCReport out;
  out.image_id = image_id;
  ExtractionResult ex = extract_ffl(report_text, lexicon);
  out.sentences = std::move(ex.sentences);
  out.skipped_candidates = ex.skipped_candidates;
  for (const FFLPattern& p : ex.patterns) {
    FindingRecord rec;
    rec.pattern = p;
    IndicatedLocation loc = indicated_location(p, image_id, region_map, lexicon);
    rec.indicated = loc.box;
    rec.located = loc.located;
    if (!loc.located) ++out.unlocatable;
    Prediction pred = predict(ckpt, featurizer, image_id, p.present, p.core);
    rec.predicted = pred.box;
    rec.e_hat = pred.e_hat;
    rec.verdict = pred.verdict();
    out.records.push_back(std::move(rec));
  }
  out.fc = fc_score(out.records);
  return out;
}

std::optional<double> fc_score(const std::vector<FindingRecord>& records,
                               bool literal_denominator) {
  if (records.empty()) return std::nullopt;
  int n_real = 0;
  double iou_sum = 0.0;
  for (const FindingRecord& r : records) {
    if (r.verdict) ++n_real;
    iou_sum += iou(r.indicated, r.predicted) / 2.0;
  }
  double denom = literal_denominator ? static_cast<double>(n_real)
                                     : static_cast<double>(records.size());
  if (denom == 0.0) return std::nullopt;
  double realness = static_cast<double>(n_real) / denom;
  double location = iou_sum / static_cast<double>(records.size());
  return 0.5 * (realness + location);
}

std::optional<double> fc_score_against_ground_truth(
    const std::vector<FindingRecord>& records, const std::vector<GroundTruthPair>& gt) {
  if (records.empty() || gt.empty()) return std::nullopt;
  int n_matched = 0;
  double iou_sum = 0.0;
  for (const FindingRecord& r : records) {
    const GroundTruthPair* match = nullptr;
    for (const GroundTruthPair& g : gt) {
      if (g.pattern.present != r.pattern.present || g.pattern.core != r.pattern.core)
        continue;
      if (r.pattern.anatomy && g.pattern.anatomy &&
          *r.pattern.anatomy != *g.pattern.anatomy)
        continue;
      match = &g;
      break;
    }
    BBox ref;  // zero box for unmatched claims
    if (match) {
      ++n_matched;
      ref = match->box;
    }
    iou_sum += iou(ref, r.indicated) / 2.0;
  }
  if (n_matched == 0) return std::nullopt;  // no F_A/F_G overlap to assess
  double n = static_cast<double>(records.size());
  return 0.5 * (n_matched / n + iou_sum / n);
}

namespace {

const std::set<std::string> kObservationVerbs = {
    "found", "seen", "noted", "observed", "identified", "demonstrated"};

// Words that alone do not make a fragment worth keeping.
const std::set<std::string> kFunctionWords = {
    "a",   "an",  "the", "and", "or",  "but",  "is",  "are", "was", "were",
    "of",  "in",  "on",  "at",  "to",  "with", "for", "there", "no", ","};

bool has_content_word(const std::vector<std::string>& words) {
  for (const std::string& w : words)
    if (!kFunctionWords.count(w) && !kObservationVerbs.count(w)) return true;
  return false;
}

std::string join_words(const std::vector<std::string>& raw_words,
                       const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < raw_words.size(); ++i) {
    if (!out.empty() && words[i] != ",") out += ' ';
    out += raw_words[i];
  }
  return out;
}

}  // namespace

std::string OfflineReformer::rewrite(const std::string& fragment) {
  // Tokenize on whitespace, keep original forms.
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : fragment) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) toks.push_back(cur), cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) toks.push_back(cur);

  auto lowered = [](std::string w) {
    while (!w.empty() && (w.back() == ',' || w.back() == '.')) w.pop_back();
    for (char& c : w) c = std::tolower(static_cast<unsigned char>(c));
    return w;
  };
  const std::set<std::string> conjunctions = {"and", "or", "but"};
  // A token that lowers to nothing was pure punctuation; strip it too.
  auto strippable = [&](const std::string& t) {
    std::string l = lowered(t);
    return l.empty() || conjunctions.count(l) > 0;
  };
  size_t b = 0, e = toks.size();
  while (b < e && strippable(toks[b])) ++b;
  while (e > b && strippable(toks[e - 1])) --e;

  std::string out;
  for (size_t i = b; i < e; ++i) {
    if (!out.empty() && toks[i] != ",") out += ' ';
    out += toks[i];
  }
  while (!out.empty() && (out.back() == ',' || out.back() == ' ')) out.pop_back();
  if (out.empty()) return out;
  out[0] = std::toupper(static_cast<unsigned char>(out[0]));
  if (out.back() != '.') out += '.';
  return out;
}

namespace {

class HttpRewriter : public Rewriter {
 public:
  HttpRewriter(std::string url, std::string model, std::string key, bool required)
      : url_(std::move(url)), model_(std::move(model)), key_(std::move(key)),
        required_(required) {}

  std::string rewrite(const std::string& fragment) override {
    // Split "http(s)://host[:port]/path" into base and path.
    std::string base = url_, path = "/";
    size_t scheme = base.find("://");
    if (scheme != std::string::npos) {
      size_t slash = base.find('/', scheme + 3);
      if (slash != std::string::npos) {
        path = base.substr(slash);
        base = base.substr(0, slash);
      }
    }
    httplib::Client cli(base);
    cli.set_connection_timeout(5);
    cli.set_read_timeout(30);
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
    json body = {{"prompt", "Please make this a well-formed sentence"},
                 {"fragment", fragment}};
    if (!model_.empty()) body["model"] = model_;
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (res && res->status == 200) {
      json reply = json::parse(res->body, nullptr, false);
      if (!reply.is_discarded() && reply.contains("text") && reply["text"].is_string())
        return reply["text"].get<std::string>();
    }
    if (required_)
      throw rewriter_error("rewriter endpoint " + url_ + " unavailable");
    return fallback_.rewrite(fragment);
  }

 private:
  std::string url_, model_, key_;
  bool required_;
  OfflineReformer fallback_;
};

}  // namespace

std::unique_ptr<Rewriter> make_rewriter_from_env(bool required, std::string* diagnostics) {
  const char* url = std::getenv("FCRX_REWRITER_URL");
  if (url == nullptr || *url == '\0') {
    if (required)
      throw rewriter_error("rewriter required but FCRX_REWRITER_URL is not set");
    if (diagnostics) *diagnostics = "offline reformer (FCRX_REWRITER_URL not set)";
    return std::make_unique<OfflineReformer>();
  }
  const char* model = std::getenv("FCRX_REWRITER_MODEL");
  const char* key = std::getenv("FCRX_REWRITER_KEY");
  if (diagnostics) *diagnostics = std::string("http rewriter ") + url;
  return std::make_unique<HttpRewriter>(url, model ? model : "", key ? key : "",
                                        required);
}

std::string correct_report(const std::string& report_text, const FCReport& fc_report,
                           Rewriter& rewriter) {
  // Spans flagged for removal, and spans that must survive because an
  // unflagged finding also claims them (shared negation cues).
  std::set<WordSpan> remove, keep;
  for (const FindingRecord& rec : fc_report.records)
    for (const WordSpan& s : rec.pattern.spans)
      (rec.verdict ? keep : remove).insert(s);
  for (const WordSpan& s : keep) remove.erase(s);

  std::set<int> flagged_sentences;
  for (const FindingRecord& rec : fc_report.records)
    if (!rec.verdict)
      for (const WordSpan& s : rec.pattern.spans) flagged_sentences.insert(s.sentence);

  std::string out;
  for (size_t si = 0; si < fc_report.sentences.size(); ++si) {
    const SentenceTokens& sent = fc_report.sentences[si];
    if (!flagged_sentences.count(static_cast<int>(si))) {
      out += sent.raw;
      continue;
    }
    std::vector<bool> removed(sent.words.size(), false);
    for (const WordSpan& s : remove) {
      if (s.sentence != static_cast<int>(si)) continue;
      for (int w = s.begin; w < s.end && w < static_cast<int>(removed.size()); ++w)
        removed[w] = true;
    }
    // "Pleural effusion found" minus the finding leaves a dangling verb.
    for (size_t w = 0; w < sent.words.size(); ++w)
      if (!removed[w] && w > 0 && removed[w - 1] && kObservationVerbs.count(sent.words[w]))
        removed[w] = true;

    std::vector<std::string> frag_raw, frag_norm;
    for (size_t w = 0; w < sent.words.size(); ++w) {
      if (removed[w]) continue;
      frag_raw.push_back(sent.raw_words[w]);
      frag_norm.push_back(sent.words[w]);
    }
    if (!has_content_word(frag_norm)) continue;  // nothing left to say

    std::string reply = rewriter.rewrite(join_words(frag_raw, frag_norm));
    if (reply.empty()) continue;

    // Keep the surrounding whitespace of the original chunk so the report
    // stays well-formed when concatenated.
    size_t lead = 0;
    while (lead < sent.raw.size() &&
           std::isspace(static_cast<unsigned char>(sent.raw[lead])))
      ++lead;
    size_t tail = sent.raw.size();
    while (tail > lead && std::isspace(static_cast<unsigned char>(sent.raw[tail - 1])))
      --tail;
    out += sent.raw.substr(0, lead);
    out += reply;
    out += sent.raw.substr(tail);
  }
  return out;
}

static json box_json(const BBox& b) {
  return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

std::string fc_report_to_json(const FCReport& report,
                              const std::vector<GroundTruthPair>* gt) {
  json j;
  j["image_id"] = report.image_id;
  if (report.fc)
    j["fc_score"] = *report.fc;
  else
    j["fc_score"] = nullptr;
  j["skipped_candidates"] = report.skipped_candidates;
  j["unlocatable"] = report.unlocatable;
  json recs = json::array();
  for (const FindingRecord& r : report.records) {
    json rec;
    rec["pattern"] = serialize_ffl(r.pattern);
    json spans = json::array();
    for (const WordSpan& s : r.pattern.spans)
      spans.push_back(json{{"sentence", s.sentence}, {"begin", s.begin}, {"end", s.end}});
    rec["spans"] = spans;
    rec["verdict"] = r.verdict;
    rec["e_hat"] = r.e_hat;
    // Overlay geometry: indicated (expected), predicted, and ground truth
    // when provided — green/red/yellow in a typical renderer.
    rec["indicated_box"] = box_json(r.indicated);
    rec["located"] = r.located;
    rec["predicted_box"] = box_json(r.predicted);
    if (gt) {
      for (const GroundTruthPair& g : *gt) {
        if (g.pattern.same_label(r.pattern)) {
          rec["ground_truth_box"] = box_json(g.box);
          break;
        }
      }
    }
    recs.push_back(std::move(rec));
  }
  j["records"] = std::move(recs);
  if (report.corrected_text) j["corrected_text"] = *report.corrected_text;
  return j.dump(2);
}

}  // namespace fcrx
