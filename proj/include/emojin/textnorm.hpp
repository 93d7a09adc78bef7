#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace emojin::text {

// A normalized word plus provenance into the original string. Tokens
// produced by expanding one source word share that word's span.
struct Token {
  std::string surface;
  size_t span_start = 0;
  size_t span_end = 0;
  // Set when the source word was immediately followed by sentence-final
  // punctuation (. ? !). Never set for dictation-style input; used by the
  // dataset module to derive boundary labels from written corpora.
  bool sentence_final = false;
};

struct TokenSeq {
  std::vector<Token> tokens;
  std::string original;

  bool empty() const { return tokens.empty(); }
  size_t size() const { return tokens.size(); }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.surface);
    return out;
  }
};

// Short form -> replacement words. Backs both contraction expansion and
// chat short-form expansion; the two ship as separate editable files.
class ExpansionTable {
 public:
  // File format: UTF-8, one entry per line, `short<TAB>expansion words`,
  // `#` starts a comment. Keys are lowercased on load; entries that map a
  // key to itself are rejected.
  static ExpansionTable load(const std::filesystem::path& path);
  static ExpansionTable from_entries(
      const std::vector<std::pair<std::string, std::vector<std::string>>>& entries);

  const std::vector<std::string>* find(const std::string& word) const;
  size_t size() const { return entries_.size(); }
  const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Whitespace tokenization with lowercasing. Punctuation is stripped at the
// token edges and never emitted as a token; sentence-final marks (. ? !)
// are recorded on the preceding token instead.
TokenSeq tokenize(const std::string& text);

// Contraction expansion followed by special-character removal: every
// non-letter is dropped from each surface, and tokens that become empty are
// removed (their sentence-final mark moves to the previous survivor).
TokenSeq normalize(const TokenSeq& seq, const ExpansionTable& contractions);

// Single left-to-right pass of whole-token short-form replacement; produced
// words are not re-expanded.
TokenSeq expand_shortforms(const TokenSeq& seq, const ExpansionTable& table);

// Validates span bookkeeping: spans are strictly increasing across source
// words; tokens expanded from one source word share its span.
bool spans_consistent(const TokenSeq& seq);

}  // namespace emojin::text
