#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "emojin/textnorm.hpp"

namespace emojin::pos {

// Closed-class trigger tags: coordinating conjunction, subordinating
// conjunction, wh-pronoun, possessive wh-pronoun, wh-determiner.
enum class TriggerTag { NONE, CC, IN, WP, WPS, WDT };

const char* tag_name(TriggerTag tag);
TriggerTag tag_from_name(const std::string& name);  // throws on unknown name

// After-token indices where emoji insertion is licensed.
struct BoundarySet {
  std::set<int> positions;

  bool contains(int p) const { return positions.count(p) > 0; }
  void insert(int p) { positions.insert(p); }
  bool empty() const { return positions.empty(); }
  size_t size() const { return positions.size(); }
  bool operator==(const BoundarySet& other) const = default;
};

// Word list for the five closed classes plus ordered disambiguation rules.
// The classes are closed, so a lexicon stands in for a full POS tagger.
class TriggerLexicon {
 public:
  // File format: UTF-8 lines `word<TAB>KIND[,KIND...]`, `#` comments.
  static TriggerLexicon load(const std::filesystem::path& path);
  static TriggerLexicon from_entries(
      const std::vector<std::pair<std::string, std::vector<TriggerTag>>>& entries);

  bool contains(const std::string& word) const { return word_to_kinds_.count(word) > 0; }
  const std::set<TriggerTag>* kinds(const std::string& word) const;
  size_t size() const { return word_to_kinds_.size(); }

  // Resolves an ambiguous word given the previous token (empty at sentence
  // start). Rules, in order: "that" is WDT after a noun-like word and IN
  // otherwise; "which" is WDT; remaining ties default to IN.
  TriggerTag disambiguate(const std::string& word, const std::string& previous) const;

 private:
  bool noun_like(const std::string& word) const;

  std::map<std::string, std::set<TriggerTag>> word_to_kinds_;
};

// One tag per token; words outside the lexicon get NONE.
std::vector<TriggerTag> tag(const text::TokenSeq& seq, const TriggerLexicon& lex);

// A trigger at index i > 0 licenses a boundary after the preceding word
// (position i-1). Sentence-initial triggers produce no boundary.
BoundarySet mark_subpart_boundaries(const text::TokenSeq& seq,
                                    const std::vector<TriggerTag>& tags);

}  // namespace emojin::pos
