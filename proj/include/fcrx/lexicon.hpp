#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fcrx {

struct FindingEntry {
  std::string canonical;
  std::string type;  // e.g. "anatomical finding", "disease", "device"
  std::vector<std::string> synonyms;
  std::vector<std::string> default_regions;  // canonical region names
};

struct RegionEntry {
  std::string canonical;  // already sided for lateralized regions ("left lung")
  std::vector<std::string> synonyms;
  bool lateralized = false;
};

// Immutable after load; safe to share across threads.
struct Lexicon {
  std::vector<FindingEntry> findings;
  std::vector<RegionEntry> regions;
  std::vector<std::string> negations;
  std::vector<std::string> lateralities;  // "left", "right", "bilateral", ...

  std::map<std::string, int> finding_by_synonym;  // normalized phrase -> findings index
  std::map<std::string, int> region_by_synonym;   // normalized phrase -> regions index
  std::map<std::string, int> finding_by_canonical;
  std::map<std::string, int> region_by_canonical;

  const FindingEntry* finding(const std::string& canonical) const;
  const RegionEntry* region(const std::string& canonical) const;
};

// A (sentence index, word start, word end) word-index range, end exclusive,
// over the report tokenization used by extract_ffl.
struct WordSpan {
  int sentence = 0;
  int begin = 0;
  int end = 0;
  bool operator==(const WordSpan& o) const {
    return sentence == o.sentence && begin == o.begin && end == o.end;
  }
  bool operator<(const WordSpan& o) const {
    if (sentence != o.sentence) return sentence < o.sentence;
    if (begin != o.begin) return begin < o.begin;
    return end < o.end;
  }
};

inline const std::string kDefaultFindingType = "finding";

// Structured finding <type | polarity | core finding | anatomy>.
struct FFLPattern {
  std::string type = kDefaultFindingType;
  bool present = true;               // polarity N: yes/no
  std::string core;                  // canonical core-finding name
  std::optional<std::string> anatomy;  // canonical region name (possibly unsided base)
  std::vector<WordSpan> spans;

  bool same_label(const FFLPattern& o) const {
    return type == o.type && present == o.present && core == o.core &&
           anatomy == o.anatomy;
  }
};

// One sentence of a report, retaining the raw text so sentences without
// flagged findings can be reproduced byte-for-byte.
struct SentenceTokens {
  std::string raw;                      // original chunk, delimiter included
  std::vector<std::string> words;       // normalized (lowercased, hyphen-split)
  std::vector<std::string> raw_words;   // original casing, hyphen-split
};

struct ExtractionResult {
  std::vector<FFLPattern> patterns;
  std::vector<SentenceTokens> sentences;
  int skipped_candidates = 0;  // lexicon-less noun phrases we ignored
};

Lexicon load_lexicon(const std::string& path);

// Sided canonical regions ("left lung", "right lung") matching an unsided
// base name ("lung").  Empty when the name has no sided variants.
std::vector<std::string> region_base_candidates(const Lexicon& lex, const std::string& base);

// Sentence split on ./;, clause split on commas and conjunctions,
// longest-synonym-first matching, negation cues scoped to the rest of the
// sentence until an adversative ("but", "however").
ExtractionResult extract_ffl(const std::string& report_text, const Lexicon& lexicon);

std::vector<SentenceTokens> tokenize_report(const std::string& report_text);

// "T|N|C|A" with the type tag elided when default and A elided when absent.
std::string serialize_ffl(const FFLPattern& p);
FFLPattern parse_ffl(const std::string& s, const Lexicon& lexicon);

}  // namespace fcrx
