#include "fcrx/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "fcrx/error.hpp"
#include "json.hpp"

namespace fcrx {

namespace {

using nlohmann::json;

std::string normalize_word(const std::string& w) {
  std::string out;
  out.reserve(w.size());
  for (char c : w) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

// Split a phrase the same way report text is tokenized: alnum runs,
// hyphens and all other punctuation act as separators.
std::vector<std::string> phrase_words(const std::string& phrase) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : phrase) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

std::string join_words(const std::vector<std::string>& ws) {
  std::string s;
  for (size_t i = 0; i < ws.size(); ++i) {
    if (i) s.push_back(' ');
    s += ws[i];
  }
  return s;
}

int line_of_offset(const std::string& text, size_t offset) {
  int line = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

const FindingEntry* Lexicon::finding(const std::string& canonical) const {
  auto it = finding_by_canonical.find(canonical);
  return it == finding_by_canonical.end() ? nullptr : &findings[it->second];
}

const RegionEntry* Lexicon::region(const std::string& canonical) const {
  auto it = region_by_canonical.find(canonical);
  return it == region_by_canonical.end() ? nullptr : &regions[it->second];
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("lexicon: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw data_error("lexicon: parse error at line " +
                     std::to_string(line_of_offset(text, e.byte)) + " in " + path +
                     ": " + e.what());
  }

  Lexicon lex;
  try {
    for (const auto& f : doc.at("findings")) {
      FindingEntry e;
      e.canonical = f.at("canonical").get<std::string>();
      e.type = f.value("type", kDefaultFindingType);
      for (const auto& s : f.value("synonyms", json::array()))
        e.synonyms.push_back(s.get<std::string>());
      for (const auto& r : f.value("default_regions", json::array()))
        e.default_regions.push_back(r.get<std::string>());
      lex.findings.push_back(std::move(e));
    }
    for (const auto& r : doc.at("regions")) {
      RegionEntry e;
      e.canonical = r.at("canonical").get<std::string>();
      e.lateralized = r.value("lateralized", false);
      for (const auto& s : r.value("synonyms", json::array()))
        e.synonyms.push_back(s.get<std::string>());
      lex.regions.push_back(std::move(e));
    }
    for (const auto& n : doc.at("negations"))
      lex.negations.push_back(n.get<std::string>());
    if (doc.contains("lateralities"))
      for (const auto& l : doc["lateralities"])
        lex.lateralities.push_back(l.get<std::string>());
  } catch (const json::exception& e) {
    throw data_error(std::string("lexicon: bad schema in ") + path + ": " + e.what());
  }
  if (lex.lateralities.empty())
    lex.lateralities = {"left", "right", "bilateral", "left sided", "right sided"};

  // Index canonical names and synonyms; every phrase must resolve to a
  // single canonical target.
  for (size_t i = 0; i < lex.findings.size(); ++i) {
    const auto& e = lex.findings[i];
    if (!lex.finding_by_canonical.emplace(e.canonical, static_cast<int>(i)).second)
      throw data_error("lexicon: duplicate finding canonical '" + e.canonical + "'");
  }
  for (size_t i = 0; i < lex.regions.size(); ++i) {
    const auto& e = lex.regions[i];
    if (!lex.region_by_canonical.emplace(e.canonical, static_cast<int>(i)).second)
      throw data_error("lexicon: duplicate region canonical '" + e.canonical + "'");
  }
  auto add_finding_phrase = [&](const std::string& phrase, int idx) {
    std::string key = join_words(phrase_words(phrase));
    auto [it, fresh] = lex.finding_by_synonym.emplace(key, idx);
    if (!fresh && it->second != idx)
      throw data_error("lexicon: synonym '" + phrase + "' maps to both '" +
                       lex.findings[it->second].canonical + "' and '" +
                       lex.findings[idx].canonical + "'");
  };
  auto add_region_phrase = [&](const std::string& phrase, int idx) {
    std::string key = join_words(phrase_words(phrase));
    auto [it, fresh] = lex.region_by_synonym.emplace(key, idx);
    if (!fresh && it->second != idx)
      throw data_error("lexicon: synonym '" + phrase + "' maps to both '" +
                       lex.regions[it->second].canonical + "' and '" +
                       lex.regions[idx].canonical + "'");
  };
  for (size_t i = 0; i < lex.findings.size(); ++i) {
    add_finding_phrase(lex.findings[i].canonical, static_cast<int>(i));
    for (const auto& s : lex.findings[i].synonyms)
      add_finding_phrase(s, static_cast<int>(i));
  }
  for (size_t i = 0; i < lex.regions.size(); ++i) {
    add_region_phrase(lex.regions[i].canonical, static_cast<int>(i));
    for (const auto& s : lex.regions[i].synonyms)
      add_region_phrase(s, static_cast<int>(i));
  }
  for (const auto& f : lex.findings)
    for (const auto& r : f.default_regions)
      if (!lex.region_by_canonical.count(r) && !region_base_candidates(lex, r).size())
        throw data_error("lexicon: finding '" + f.canonical +
                         "' default region '" + r + "' is not a known region");
  return lex;
}

std::vector<std::string> region_base_candidates(const Lexicon& lex, const std::string& base) {
  std::vector<std::string> out;
  for (const auto& side : {std::string("left "), std::string("right ")}) {
    auto it = lex.region_by_canonical.find(side + base);
    if (it != lex.region_by_canonical.end()) out.push_back(side + base);
  }
  return out;
}

std::vector<SentenceTokens> tokenize_report(const std::string& text) {
  std::vector<SentenceTokens> sentences;
  size_t start = 0;
  auto flush = [&](size_t end) {
    if (end <= start) return;
    SentenceTokens st;
    st.raw = text.substr(start, end - start);
    std::string cur;
    for (char c : st.raw) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur.push_back(c);
      } else {
        if (!cur.empty()) {
          st.raw_words.push_back(cur);
          st.words.push_back(normalize_word(cur));
          cur.clear();
        }
        if (c == ',') {
          st.raw_words.push_back(",");
          st.words.push_back(",");
        }
      }
    }
    if (!cur.empty()) {
      st.raw_words.push_back(cur);
      st.words.push_back(normalize_word(cur));
    }
    sentences.push_back(std::move(st));
    start = end;
  };
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '.' || text[i] == ';') {
      size_t end = i + 1;
      while (end < text.size() && std::isspace(static_cast<unsigned char>(text[end]))) ++end;
      flush(end);
      i = end - 1;
    }
  }
  flush(text.size());
  return sentences;
}

namespace {

enum class MatchKind { finding, region, negation, laterality };

struct Match {
  MatchKind kind;
  int begin = 0;
  int end = 0;   // exclusive
  int index = 0; // table index (finding/region) or unused
  std::string phrase;
};

// Longest phrase match at position i against one synonym table.
template <typename Map>
int longest_at(const std::vector<std::string>& words, int i, const Map& table,
               int max_len, int* out_index) {
  for (int len = max_len; len >= 1; --len) {
    if (i + len > static_cast<int>(words.size())) continue;
    std::string key;
    for (int k = 0; k < len; ++k) {
      if (words[i + k] == ",") return longest_at(words, i, table, std::min(len - 1, k), out_index);
      if (k) key.push_back(' ');
      key += words[i + k];
    }
    auto it = table.find(key);
    if (it != table.end()) {
      if (out_index) *out_index = it->second;
      return len;
    }
  }
  return 0;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kStop = {
      "the", "a", "an", "is", "are", "was", "were", "there", "of", "in",
      "on", "at", "to", "with", "and", "or", "but", "for", "this", "that",
      "image", "chest", "x", "ray", "xray", "radiograph", "shows", "seen",
      "noted", "found", "observed", "stable", "unchanged", ","};
  return kStop;
}

}  // namespace

ExtractionResult extract_ffl(const std::string& report_text, const Lexicon& lex) {
  ExtractionResult result;
  result.sentences = tokenize_report(report_text);

  std::map<std::string, int> negation_table, laterality_table;
  for (size_t i = 0; i < lex.negations.size(); ++i)
    negation_table[join_words(phrase_words(lex.negations[i]))] = static_cast<int>(i);
  for (size_t i = 0; i < lex.lateralities.size(); ++i)
    laterality_table[join_words(phrase_words(lex.lateralities[i]))] = static_cast<int>(i);

  auto table_max_len = [](const auto& table) {
    int m = 1;
    for (const auto& [k, v] : table)
      m = std::max(m, 1 + static_cast<int>(std::count(k.begin(), k.end(), ' ')));
    return m;
  };
  const int max_f = table_max_len(lex.finding_by_synonym);
  const int max_r = table_max_len(lex.region_by_synonym);
  const int max_n = table_max_len(negation_table);
  const int max_l = table_max_len(laterality_table);

  for (int si = 0; si < static_cast<int>(result.sentences.size()); ++si) {
    const auto& words = result.sentences[si].words;
    const int n = static_cast<int>(words.size());

    // Greedy longest-first matching, left to right.
    std::vector<Match> matches;
    int i = 0;
    while (i < n) {
      if (words[i] == ",") { ++i; continue; }
      int idx = -1;
      int lf = longest_at(words, i, lex.finding_by_synonym, max_f, &idx);
      int ir = -1;
      int lr = longest_at(words, i, lex.region_by_synonym, max_r, &ir);
      int ln = longest_at(words, i, negation_table, max_n, nullptr);
      int ll = longest_at(words, i, laterality_table, max_l, nullptr);
      int best = std::max({lf, lr, ln, ll});
      if (best == 0) { ++i; continue; }
      Match m;
      m.begin = i;
      m.end = i + best;
      if (lf == best) {
        m.kind = MatchKind::finding;
        m.index = idx;
      } else if (lr == best) {
        m.kind = MatchKind::region;
        m.index = ir;
      } else if (ln == best) {
        m.kind = MatchKind::negation;
      } else {
        m.kind = MatchKind::laterality;
      }
      std::string phrase;
      for (int k = m.begin; k < m.end; ++k) {
        if (k > m.begin) phrase.push_back(' ');
        phrase += words[k];
      }
      m.phrase = phrase;
      matches.push_back(m);
      i = m.end;
    }

    // Clause ids: commas and coordinating conjunctions open a new clause.
    std::vector<int> clause(n, 0);
    int cid = 0;
    for (int k = 0; k < n; ++k) {
      if (words[k] == "," || words[k] == "and" || words[k] == "or" || words[k] == "but") ++cid;
      clause[k] = cid;
    }

    // Negation scope: from the cue to the end of the sentence, cleared by
    // an adversative.  List commas and "or"/"and" do not end the scope, so
    // "no consolidation, edema or pneumothorax" negates every listed finding.
    std::vector<int> negated_by(n, -1);  // match index of governing cue
    for (size_t mi = 0; mi < matches.size(); ++mi) {
      if (matches[mi].kind != MatchKind::negation) continue;
      for (int k = matches[mi].end; k < n; ++k) {
        if (words[k] == "but" || words[k] == "however") break;
        if (negated_by[k] < 0) negated_by[k] = static_cast<int>(mi);
      }
    }

    for (size_t mi = 0; mi < matches.size(); ++mi) {
      const Match& fm = matches[mi];
      if (fm.kind != MatchKind::finding) continue;
      const FindingEntry& fe = lex.findings[fm.index];

      FFLPattern p;
      p.type = fe.type;
      p.core = fe.canonical;
      p.present = negated_by[fm.begin] < 0;
      p.spans.push_back({si, fm.begin, fm.end});
      if (!p.present) {
        const Match& cue = matches[negated_by[fm.begin]];
        p.spans.push_back({si, cue.begin, cue.end});
      }

      // Nearest region in the same clause, then the nearest laterality
      // marker in the clause to resolve sided variants.
      const Match* region = nullptr;
      const Match* lat = nullptr;
      int best_rd = n + 1, best_ld = n + 1;
      for (const Match& om : matches) {
        if (clause[om.begin] != clause[fm.begin]) continue;
        int d = std::abs(om.begin - fm.begin);
        if (om.kind == MatchKind::region && d < best_rd) { region = &om; best_rd = d; }
        if (om.kind == MatchKind::laterality && d < best_ld) { lat = &om; best_ld = d; }
      }

      if (region) {
        std::string canon = lex.regions[region->index].canonical;
        if (lat && lex.regions[region->index].lateralized &&
            canon.rfind("left ", 0) != 0 && canon.rfind("right ", 0) != 0) {
          std::string side = lat->phrase.substr(0, lat->phrase.find(' '));
          if (lex.region_by_canonical.count(side + " " + canon))
            canon = side + " " + canon;
        }
        p.anatomy = canon;
        p.spans.push_back({si, region->begin, region->end});
        if (lat) p.spans.push_back({si, lat->begin, lat->end});
      } else if (lat) {
        // Laterality without an explicit region: pick the matching sided
        // default region of the finding, if it has one.
        std::string side = lat->phrase.substr(0, lat->phrase.find(' '));
        for (const auto& dr : fe.default_regions) {
          if (dr.rfind(side + " ", 0) == 0) {
            p.anatomy = dr;
            p.spans.push_back({si, lat->begin, lat->end});
            break;
          }
          auto sided = side + " " + dr;
          if (lex.region_by_canonical.count(sided)) {
            p.anatomy = sided;
            p.spans.push_back({si, lat->begin, lat->end});
            break;
          }
        }
      }
      std::sort(p.spans.begin(), p.spans.end());
      result.patterns.push_back(std::move(p));
    }

    // Diagnostics: unmatched non-stopword tokens.
    std::vector<bool> covered(n, false);
    for (const Match& m : matches)
      for (int k = m.begin; k < m.end; ++k) covered[k] = true;
    bool in_run = false;
    for (int k = 0; k < n; ++k) {
      bool candidate = !covered[k] && !stopwords().count(words[k]);
      if (candidate && !in_run) ++result.skipped_candidates;
      in_run = candidate;
    }
  }
  return result;
}

std::string serialize_ffl(const FFLPattern& p) {
  std::string s;
  if (p.type != kDefaultFindingType) s += p.type + "|";
  s += p.present ? "yes" : "no";
  s += "|" + p.core;
  if (p.anatomy) s += "|" + *p.anatomy;
  return s;
}

FFLPattern parse_ffl(const std::string& s, const Lexicon& lex) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : s) {
    if (c == '|') { fields.push_back(cur); cur.clear(); }
    else cur.push_back(c);
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    // trim
    size_t b = f.find_first_not_of(" \t");
    size_t e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? "" : f.substr(b, e - b + 1);
  }
  if (fields.size() < 2 || fields.size() > 4)
    throw data_error("ffl: expected 2-4 pipe-separated fields in '" + s + "'");

  FFLPattern p;
  size_t at = 0;
  if (fields[0] != "yes" && fields[0] != "no") {
    if (fields.size() < 3)
      throw data_error("ffl: bad polarity token '" + fields[0] + "' in '" + s + "'");
    p.type = fields[0];
    at = 1;
  }
  if (fields[at] == "yes") p.present = true;
  else if (fields[at] == "no") p.present = false;
  else throw data_error("ffl: bad polarity token '" + fields[at] + "' in '" + s + "'");
  if (at + 1 >= fields.size())
    throw data_error("ffl: missing core finding in '" + s + "'");

  auto fit = lex.finding_by_synonym.find(fields[at + 1]);
  if (fit == lex.finding_by_synonym.end())
    throw data_error("ffl: unknown core finding '" + fields[at + 1] + "'");
  p.core = lex.findings[fit->second].canonical;
  if (at == 0 || p.type.empty()) p.type = lex.findings[fit->second].type;

  if (at + 2 < fields.size() && !fields[at + 2].empty()) {
    const std::string& a = fields[at + 2];
    if (!lex.region_by_canonical.count(a) && region_base_candidates(lex, a).empty())
      throw data_error("ffl: unknown anatomy '" + a + "'");
    p.anatomy = a;
  }
  return p;
}

}  // namespace fcrx
