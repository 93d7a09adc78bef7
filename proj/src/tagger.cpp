#include "emojin/tagger.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace emojin::pos {

namespace {

// Common function words used by the "that" rule: a preceding word from this
// list (or from the trigger lexicon itself) is not noun-like, so "that"
// reads as a subordinating conjunction there.
const std::unordered_set<std::string>& function_words() {
  static const std::unordered_set<std::string> words = {
      "i",    "you",    "he",    "she",   "it",    "we",     "they",  "me",    "him",
      "her",  "us",     "them",  "a",     "an",    "the",    "this",  "these", "those",
      "my",   "your",   "his",   "its",   "our",   "their",  "is",    "am",    "are",
      "was",  "were",   "be",    "been",  "being", "do",     "does",  "did",   "have",
      "has",  "had",    "will",  "would", "can",   "could",  "shall", "should", "may",
      "might", "must",  "not",   "no",    "yes",   "to",     "of",    "in",    "on",
      "at",   "by",     "with",  "from",  "for",   "so",     "said",  "say",   "says",
      "think", "thought", "know", "knew", "believe", "hope", "wish",  "feel",  "felt"};
  return words;
}

}  // namespace

const char* tag_name(TriggerTag tag) {
  switch (tag) {
    case TriggerTag::NONE: return "NONE";
    case TriggerTag::CC: return "CC";
    case TriggerTag::IN: return "IN";
    case TriggerTag::WP: return "WP";
    case TriggerTag::WPS: return "WPS";
    case TriggerTag::WDT: return "WDT";
  }
  return "NONE";
}

TriggerTag tag_from_name(const std::string& name) {
  if (name == "CC") return TriggerTag::CC;
  if (name == "IN") return TriggerTag::IN;
  if (name == "WP") return TriggerTag::WP;
  if (name == "WPS" || name == "WP$") return TriggerTag::WPS;
  if (name == "WDT") return TriggerTag::WDT;
  if (name == "NONE") return TriggerTag::NONE;
  throw std::runtime_error("unknown trigger tag: " + name);
}

TriggerLexicon TriggerLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trigger lexicon: " + path.string());
  std::vector<std::pair<std::string, std::vector<TriggerTag>>> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": missing tab");
    std::string word = line.substr(0, tab);
    std::vector<TriggerTag> kinds;
    std::istringstream rest(line.substr(tab + 1));
    std::string kind;
    while (std::getline(rest, kind, ',')) {
      if (!kind.empty()) kinds.push_back(tag_from_name(kind));
    }
    if (word.empty() || kinds.empty())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": empty entry");
    entries.emplace_back(word, kinds);
  }
  return from_entries(entries);
}

TriggerLexicon TriggerLexicon::from_entries(
    const std::vector<std::pair<std::string, std::vector<TriggerTag>>>& entries) {
  TriggerLexicon lex;
  for (const auto& [word, kinds] : entries) {
    auto& set = lex.word_to_kinds_[word];
    for (auto k : kinds) {
      if (k == TriggerTag::NONE) throw std::runtime_error("NONE is not a lexicon kind");
      set.insert(k);
    }
    if (set.empty()) throw std::runtime_error("lexicon word with no kinds: " + word);
  }
  return lex;
}

const std::set<TriggerTag>* TriggerLexicon::kinds(const std::string& word) const {
  auto it = word_to_kinds_.find(word);
  return it == word_to_kinds_.end() ? nullptr : &it->second;
}

bool TriggerLexicon::noun_like(const std::string& word) const {
  if (word.empty()) return false;  // sentence start
  if (contains(word)) return false;
  return function_words().count(word) == 0;
}

TriggerTag TriggerLexicon::disambiguate(const std::string& word, const std::string& previous) const {
  const auto* set = kinds(word);
  if (!set) return TriggerTag::NONE;
  if (set->size() == 1) return *set->begin();
  if (word == "that")
    return noun_like(previous) ? TriggerTag::WDT : TriggerTag::IN;
  if (word == "which") return TriggerTag::WDT;
  if (set->count(TriggerTag::IN)) return TriggerTag::IN;
  return *set->begin();
}

std::vector<TriggerTag> tag(const text::TokenSeq& seq, const TriggerLexicon& lex) {
  std::vector<TriggerTag> tags(seq.size(), TriggerTag::NONE);
  for (size_t i = 0; i < seq.size(); ++i) {
    const std::string& word = seq.tokens[i].surface;
    const std::string previous = i > 0 ? seq.tokens[i - 1].surface : std::string();
    tags[i] = lex.disambiguate(word, previous);
  }
  return tags;
}

BoundarySet mark_subpart_boundaries(const text::TokenSeq& seq,
                                    const std::vector<TriggerTag>& tags) {
  if (tags.size() != seq.size())
    throw std::invalid_argument("mark_subpart_boundaries: tag/token count mismatch");
  BoundarySet set;
  for (size_t i = 1; i < tags.size(); ++i)
    if (tags[i] != TriggerTag::NONE) set.insert(static_cast<int>(i) - 1);
  return set;
}

}  // namespace emojin::pos
