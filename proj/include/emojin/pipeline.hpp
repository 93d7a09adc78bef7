#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emojin/boundary_model.hpp"
#include "emojin/emoji_model.hpp"
#include "emojin/textnorm.hpp"

namespace emojin::pipeline {

struct ModelNotLoaded : std::runtime_error {
  explicit ModelNotLoaded(const std::string& what) : std::runtime_error(what) {}
};

struct PipelineConfig {
  // Minimum top-1 probability for an emoji to be inserted at a subpart.
  float emoji_threshold = 0.3f;
  // Overrides the boundary model's own decision threshold when set.
  std::optional<float> boundary_threshold;
};

struct Insertion {
  int after_token = 0;
  int label = 0;
  std::string glyph;
  float probability = 0;
};

struct AnnotatedText {
  std::string original;
  std::vector<std::string> words;  // normalized tokens the decisions refer to
  std::vector<Insertion> insertions;  // strictly increasing after_token
};

// Words with emoji glyphs appended after their insertion points, single
// space separated; stripping the glyphs recovers the words exactly.
std::string render(const AnnotatedText& annotated);

struct GoldMessage {
  std::string text;
  std::vector<std::pair<int, std::string>> insertions;  // (after_token, glyph)
};

// Gold file: UTF-8 lines `text<TAB>pos:emoji[,pos:emoji...]`; an absent or
// empty second column means no insertions.
std::vector<GoldMessage> load_gold(const std::filesystem::path& path);

class Pipeline {
 public:
  Pipeline() = default;
  Pipeline(boundary::BoundaryModel bmodel, data::Vocabulary bvocab, emoji::EmojiModel emodel,
           data::Vocabulary evocab, emoji::EmojiLabelSet labels, PipelineConfig cfg = {},
           text::ExpansionTable contractions = {}, text::ExpansionTable shortforms = {});

  // Reads both weight files, their `.vocab` sidecars, and the label file.
  static Pipeline load(const std::filesystem::path& boundary_weights,
                       const std::filesystem::path& emoji_weights,
                       const std::filesystem::path& labels_path, PipelineConfig cfg = {},
                       text::ExpansionTable contractions = {},
                       text::ExpansionTable shortforms = {});

  bool loaded() const { return loaded_; }
  const boundary::BoundaryModel& boundary_model() const { return bmodel_; }
  const emoji::EmojiModel& emoji_model() const { return emodel_; }
  const emoji::EmojiLabelSet& labels() const { return labels_; }
  const data::Vocabulary& boundary_vocab() const { return bvocab_; }
  const data::Vocabulary& emoji_vocab() const { return evocab_; }
  const PipelineConfig& config() const { return cfg_; }
  PipelineConfig& config() { return cfg_; }

  // Normalization, boundary detection, subpart splitting, one emoji per
  // subpart when its top-1 probability clears the threshold. End of text
  // always terminates a subpart.
  AnnotatedText annotate(const std::string& input) const;  // throws ModelNotLoaded

  text::TokenSeq preprocess(const std::string& input) const;

 private:
  bool loaded_ = false;
  boundary::BoundaryModel bmodel_;
  data::Vocabulary bvocab_;
  emoji::EmojiModel emodel_;
  data::Vocabulary evocab_;
  emoji::EmojiLabelSet labels_;
  PipelineConfig cfg_;
  text::ExpansionTable contractions_;
  text::ExpansionTable shortforms_;
};

// A message is correct iff every gold insertion is matched at its exact
// position by a prediction of the same category and there are no extra
// predictions. Returns percent over all messages.
double overall_accuracy(const std::vector<AnnotatedText>& predictions,
                        const std::vector<GoldMessage>& gold, const emoji::EmojiLabelSet& labels);

struct StageStats {
  double mean_ms = 0;
  double median_ms = 0;
  double p99_ms = 0;
};

struct BenchReport {
  StageStats boundary;  // per-word milliseconds
  StageStats emoji;
  StageStats full;
  std::uintmax_t boundary_file_bytes = 0;
  std::uintmax_t emoji_file_bytes = 0;
};

// 100 warmup + `iterations` measured runs, cycling through `texts`;
// per-iteration value is wall time divided by the text's word count.
BenchReport bench(const Pipeline& pipeline, const std::vector<std::string>& texts,
                  int iterations = 1000, int warmup = 100);

}  // namespace emojin::pipeline
