#include "emojin/textnorm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace emojin::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Punctuation stripped at token edges. Other symbols ($, digits, ...) stay
// in the surface until normalize() removes them.
bool is_edge_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '"':
    case '\'':
    case '(':
    case ')':
    case '[':
    case ']':
    case '{':
    case '}':
    case '<':
    case '>':
    case '`':
      return true;
    default:
      return false;
  }
}

bool is_terminal_punct(char c) { return c == '.' || c == '?' || c == '!'; }

std::string to_lower(std::string s) {
  for (auto& c : s) c = lower(c);
  return s;
}

}  // namespace

ExpansionTable ExpansionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open expansion table: " + path.string());
  ExpansionTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == '\r' || is_space(line.back()))) line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": missing tab");
    std::string key = to_lower(line.substr(0, tab));
    std::istringstream rest(line.substr(tab + 1));
    std::vector<std::string> words;
    std::string w;
    while (rest >> w) words.push_back(to_lower(w));
    if (key.empty() || words.empty())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": empty entry");
    if (words.size() == 1 && words[0] == key)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": key maps to itself: " + key);
    table.entries_[key] = std::move(words);
  }
  return table;
}

ExpansionTable ExpansionTable::from_entries(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& entries) {
  ExpansionTable table;
  for (const auto& [key, words] : entries) {
    if (key.empty() || words.empty()) throw std::runtime_error("empty expansion entry");
    if (words.size() == 1 && words[0] == key)
      throw std::runtime_error("key maps to itself: " + key);
    table.entries_[to_lower(key)] = words;
  }
  return table;
}

const std::vector<std::string>* ExpansionTable::find(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

TokenSeq tokenize(const std::string& text) {
  TokenSeq seq;
  seq.original = text;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    size_t chunk_start = i;
    while (i < n && !is_space(text[i])) ++i;
    size_t chunk_end = i;

    size_t core_start = chunk_start;
    while (core_start < chunk_end && is_edge_punct(text[core_start])) ++core_start;
    size_t core_end = chunk_end;
    while (core_end > core_start && is_edge_punct(text[core_end - 1])) --core_end;

    bool terminal = false;
    for (size_t p = core_end; p < chunk_end; ++p)
      if (is_terminal_punct(text[p])) terminal = true;

    if (core_start == core_end) {
      // pure punctuation chunk: attach any sentence-final mark to the
      // previous token, emit nothing
      bool any_terminal = false;
      for (size_t p = chunk_start; p < chunk_end; ++p)
        if (is_terminal_punct(text[p])) any_terminal = true;
      if (any_terminal && !seq.tokens.empty()) seq.tokens.back().sentence_final = true;
      continue;
    }

    Token tok;
    tok.surface = to_lower(text.substr(core_start, core_end - core_start));
    tok.span_start = core_start;
    tok.span_end = core_end;
    tok.sentence_final = terminal;
    seq.tokens.push_back(std::move(tok));
  }
  return seq;
}

namespace {

// Whole-token replacement, one left-to-right pass; expansion outputs are
// appended verbatim and inherit the source span. The sentence-final mark
// lands on the last word of an expansion.
TokenSeq expand_pass(const TokenSeq& seq, const ExpansionTable& table) {
  TokenSeq out;
  out.original = seq.original;
  for (const auto& tok : seq.tokens) {
    const auto* expansion = table.find(tok.surface);
    if (!expansion) {
      out.tokens.push_back(tok);
      continue;
    }
    for (size_t k = 0; k < expansion->size(); ++k) {
      Token t;
      t.surface = (*expansion)[k];
      t.span_start = tok.span_start;
      t.span_end = tok.span_end;
      t.sentence_final = tok.sentence_final && k + 1 == expansion->size();
      out.tokens.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

TokenSeq normalize(const TokenSeq& seq, const ExpansionTable& contractions) {
  TokenSeq expanded = expand_pass(seq, contractions);
  TokenSeq out;
  out.original = seq.original;
  for (auto& tok : expanded.tokens) {
    std::string cleaned;
    cleaned.reserve(tok.surface.size());
    for (char c : tok.surface)
      if (is_letter(c)) cleaned.push_back(lower(c));
    if (cleaned.empty()) {
      // dropped; the sentence still ended here
      if (tok.sentence_final && !out.tokens.empty()) out.tokens.back().sentence_final = true;
      continue;
    }
    tok.surface = std::move(cleaned);
    out.tokens.push_back(std::move(tok));
  }
  return out;
}

TokenSeq expand_shortforms(const TokenSeq& seq, const ExpansionTable& table) {
  return expand_pass(seq, table);
}

bool spans_consistent(const TokenSeq& seq) {
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    const auto& t = seq.tokens[i];
    if (t.span_start >= t.span_end) return false;
    if (i == 0) continue;
    const auto& prev = seq.tokens[i - 1];
    bool same_source = prev.span_start == t.span_start && prev.span_end == t.span_end;
    if (!same_source && t.span_start < prev.span_end) return false;
  }
  return true;
}

}  // namespace emojin::text
