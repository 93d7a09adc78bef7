#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "emojin/tagger.hpp"
#include "emojin/textnorm.hpp"

namespace emojin::data {

struct EmptyCorpus : std::runtime_error {
  explicit EmptyCorpus(const std::string& what) : std::runtime_error(what) {}
};
struct InvalidWindowConfig : std::runtime_error {
  explicit InvalidWindowConfig(const std::string& what) : std::runtime_error(what) {}
};

// Frequency-ranked word index with reserved PAD=0 and UNK=1. Selection is
// by descending corpus frequency, ties broken lexicographically, so the
// same corpus always yields the same vocabulary.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() = default;

  int id(const std::string& word) const {
    auto it = word_to_id_.find(word);
    return it == word_to_id_.end() ? kUnk : it->second;
  }
  const std::string& word(int id) const { return id_to_word_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(id_to_word_.size()); }
  const std::vector<std::string>& id_to_word() const { return id_to_word_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend class VocabBuilder;

 private:
  std::unordered_map<std::string, int> word_to_id_;
  std::vector<std::string> id_to_word_;
};

// Streaming frequency counter; finish() ranks and caps the vocabulary.
class VocabBuilder {
 public:
  void add(const std::string& word) { ++counts_[word]; }
  void add_all(const text::TokenSeq& seq) {
    for (const auto& t : seq.tokens) add(t.surface);
  }
  Vocabulary finish(int max_size) const;  // throws EmptyCorpus

 private:
  std::unordered_map<std::string, std::int64_t> counts_;
};

Vocabulary build_vocab(const std::vector<std::string>& corpus_tokens, int max_size);

// Tokens plus a boundary-after flag per token.
struct LabeledTokenSeq {
  text::TokenSeq tokens;
  std::vector<bool> boundary_after;
};

// Fixed-width window of token ids; the label refers to the token at
// 1-indexed `offset` within the window.
struct Sample {
  std::vector<std::uint32_t> window;
  bool label = false;
};

struct ClassStats {
  std::int64_t boundary = 0;      // N
  std::int64_t no_boundary = 0;   // M
  std::int64_t total() const { return boundary + no_boundary; }
};

// Boundary labels for a raw (punctuated) article: a label follows token i
// when the raw text carried sentence-final punctuation there, or when the
// next token is a closed-class trigger. Punctuation is consumed in the
// process; the returned tokens are normalized, dictation-style words.
LabeledTokenSeq derive_labels(const std::string& raw_article, const pos::TriggerLexicon& lex,
                              const text::ExpansionTable* contractions = nullptr);

// The id window for a decision at token `i`: tokens [i-(offset-1), i+(W-offset)]
// with PAD outside the article. Shared by sample compilation and inference
// so both sides use identical geometry.
std::vector<std::uint32_t> window_at(const std::vector<int>& ids, int i, int window, int offset);

// One sample per token. Throws InvalidWindowConfig unless W >= 2 and
// 1 <= offset <= W.
std::vector<Sample> make_windows(const LabeledTokenSeq& seq, const Vocabulary& vocab,
                                 int window = 6, int offset = 4);

ClassStats class_stats(const std::vector<Sample>& samples);

// Number of maximal token runs between boundaries; end of text always
// terminates a run. Empty sequences have zero subparts.
int count_subparts(const LabeledTokenSeq& seq);

// Keeps only dialogs with at least two subparts, i.e. at least one
// boundary before the final token.
std::vector<LabeledTokenSeq> extract_multisentence(const std::vector<std::string>& dialogs,
                                                   const pos::TriggerLexicon& lex,
                                                   const text::ExpansionTable* contractions = nullptr);

// Labels every document of a corpus (one document per line, already read
// into memory). `threads` > 1 shards documents across workers; the output
// order always equals single-threaded document order.
std::vector<LabeledTokenSeq> label_corpus(const std::vector<std::string>& documents,
                                          const pos::TriggerLexicon& lex,
                                          const text::ExpansionTable* contractions = nullptr,
                                          int threads = 1);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Samples cache: binary little-endian, magic "VMDS", u32 version, u32 W,
// u32 offset, u64 count, then per sample W u32 ids + u8 label.
struct SampleCache {
  int window = 6;
  int offset = 4;
  std::vector<Sample> samples;
};

void save_samples(const std::filesystem::path& path, const SampleCache& cache);
SampleCache load_samples(const std::filesystem::path& path);

}  // namespace emojin::data
