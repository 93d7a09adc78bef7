#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emojin/dataset.hpp"
#include "emojin/nn.hpp"

namespace emojin::emoji {

struct InvalidConfig : std::runtime_error {
  explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};
struct EmptySubpart : std::runtime_error {
  explicit EmptySubpart(const std::string& what) : std::runtime_error(what) {}
};

// --- label set ---------------------------------------------------------------

struct EmojiLabel {
  std::string glyph;
  std::string category;
  std::string name;
};

class EmojiLabelSet {
 public:
  static constexpr int kLabelCount = 64;

  // File format: UTF-8 lines `emoji<TAB>category<TAB>name`, `#` comments.
  // The shipped set carries exactly 64 labels; load enforces that.
  static EmojiLabelSet load(const std::filesystem::path& path);
  static EmojiLabelSet from_entries(std::vector<EmojiLabel> entries);  // any count, for harnesses

  int size() const { return static_cast<int>(labels_.size()); }
  const EmojiLabel& at(int index) const { return labels_.at(static_cast<size_t>(index)); }
  const std::vector<EmojiLabel>& all() const { return labels_; }
  // -1 when the glyph is not in the set.
  int index_of(const std::string& glyph) const;
  const std::string& category_of(int index) const { return at(index).category; }

 private:
  std::vector<EmojiLabel> labels_;
};

// --- configuration -------------------------------------------------------------

// Char ids: PAD=0, 'a'..'z' -> 1..26, anything else -> 27.
constexpr int kCharVocab = 28;
std::vector<int> char_ids(const std::string& word, int max_len);

struct AcaConfig {
  int vocab_size = 60000;
  int word_emb = 16;
  int char_emb = 8;
  // (kernel width, filter count) per char-CNN branch.
  std::vector<std::pair<int, int>> char_kernels = {{1, 5}, {2, 10}, {3, 15}};
  int lstm1 = 128;
  int lstm2 = 128;
  int attn_dim = 0;  // 0 resolves to the concat dimension
  int classes = 64;
  int max_word_len = 24;

  int char_features() const {
    int n = 0;
    for (auto [w, f] : char_kernels) (void)w, n += f;
    return n;
  }
  int fused_dim() const { return word_emb + char_features(); }
  int concat_dim() const { return fused_dim() + lstm1 + lstm2; }
  void validate() const;  // throws InvalidConfig
};

enum class EmojiArch { ACA, BOW, LSTM_CHAR, LSTM_WORD };

const char* emoji_arch_name(EmojiArch a);
EmojiArch emoji_arch_from_name(const std::string& name);

// --- predictions ------------------------------------------------------------------

struct EmojiDistribution {
  std::vector<float> probabilities;  // one per class, sums to 1
  std::vector<int> ranked;           // class indices by descending probability, ties by index
};

struct EmojiSample {
  std::vector<std::string> words;
  int label = 0;
};

// Training file: UTF-8 lines `label_index<TAB>text`.
std::vector<EmojiSample> load_emoji_samples(const std::filesystem::path& path);

struct EmojiTrainOptions {
  int epochs = 100;
  int batch = 32;
  nn::AdamConfig adam;
  unsigned seed = 42;
  bool shuffle = true;
  float stop_at_accuracy = 1.0f;
  bool verbose = false;
};

struct EmojiMetrics {
  double top1 = 0;         // percent
  double top5 = 0;         // percent
  double weighted_f1 = 0;  // percent, class-support-weighted mean of per-class F1
};

class EmojiModel {
 public:
  EmojiModel() = default;

  static EmojiModel build(EmojiArch arch, const AcaConfig& cfg, unsigned seed);

  EmojiArch arch() const { return arch_; }
  const AcaConfig& config() const { return cfg_; }
  const nn::ParamStore& params() const { return params_; }
  nn::ParamStore& params() { return params_; }

  // Full distribution over classes. OOV words map to UNK on the word path
  // and keep their characters on the char path.
  EmojiDistribution predict(const std::vector<std::string>& words,
                            const data::Vocabulary& vocab) const;  // throws EmptySubpart
  // Same distribution with `ranked` truncated to the top k.
  EmojiDistribution predict_topk(const std::vector<std::string>& words,
                                 const data::Vocabulary& vocab, int k) const;

  nn::TrainHistory train(const std::vector<EmojiSample>& samples, const data::Vocabulary& vocab,
                         const EmojiTrainOptions& opt);

  EmojiMetrics evaluate(const std::vector<EmojiSample>& samples,
                        const data::Vocabulary& vocab) const;

  void save(const std::filesystem::path& path, bool quantized = false) const;
  static EmojiModel load(const std::filesystem::path& path);

 private:
  nn::Var<float> logits(const std::vector<std::string>& words, const data::Vocabulary& vocab) const;

  EmojiArch arch_ = EmojiArch::ACA;
  AcaConfig cfg_;
  nn::ParamStore params_;
};

}  // namespace emojin::emoji
