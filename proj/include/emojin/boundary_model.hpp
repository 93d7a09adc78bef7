#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "emojin/dataset.hpp"
#include "emojin/nn.hpp"
#include "emojin/tagger.hpp"

namespace emojin::boundary {

struct InvalidConfig : std::runtime_error {
  explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};
struct WrongWindowWidth : std::runtime_error {
  explicit WrongWindowWidth(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyEvalSet : std::runtime_error {
  explicit EmptyEvalSet(const std::string& what) : std::runtime_error(what) {}
};

enum class Arch { CNN, BiLSTM };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct BoundaryConfig {
  int window = 6;
  int offset = 4;        // 1-indexed decision slot inside the window
  int vocab_size = 20000;
  int emb_dim = 50;
  int filters = 512;
  int kernel = 3;
  int dilation = 2;
  int pool = 2;
  Arch arch = Arch::CNN;
  int bilstm_hidden = 64;
  // When set, replaces the measured N/M negative-class weight (the BiLSTM
  // ablations sweep this ratio). Ignored when class_weighting is off.
  std::optional<float> class_weight_ratio;
  bool class_weighting = true;
  float threshold = 0.5f;

  int conv_out_len() const { return window - (kernel - 1) * dilation; }
  void validate() const;  // throws InvalidConfig
};

// Shrinks kernel/dilation/pool so the CNN stack stays valid on small
// windows (the sweep goes down to W=2, where a dilated width-3 kernel no
// longer fits).
BoundaryConfig adapt_geometry(BoundaryConfig cfg);

using nn::EpochStats;
using nn::TrainHistory;

struct TrainOptions {
  int epochs = 50;
  int batch = 64;
  nn::AdamConfig adam;
  unsigned seed = 42;
  bool shuffle = true;
  // Stop once an epoch's training accuracy reaches this value; 2.0
  // disables early stopping.
  float stop_at_accuracy = 1.0f;
  bool verbose = false;
};

struct BoundaryMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;
  // Exact-set-match accuracy over sequences with >= 2 gold subparts; 0
  // when the eval set has no such sequence.
  double multiline_accuracy = 0;
};

class BoundaryModel {
 public:
  BoundaryModel() = default;

  static BoundaryModel build(const BoundaryConfig& cfg, unsigned seed);

  const BoundaryConfig& config() const { return cfg_; }
  BoundaryConfig& config() { return cfg_; }
  const nn::ParamStore& params() const { return params_; }
  nn::ParamStore& params() { return params_; }

  float predict_window(const std::vector<std::uint32_t>& window) const;  // throws WrongWindowWidth
  bool decide_window(const std::vector<std::uint32_t>& window) const {
    return predict_window(window) >= cfg_.threshold;
  }

  // Slides the same PAD-edged geometry as dataset::make_windows and marks
  // position i when p_i >= threshold.
  pos::BoundarySet predict_boundaries(const text::TokenSeq& seq, const data::Vocabulary& vocab) const;

  TrainHistory train(const std::vector<data::Sample>& samples, const data::ClassStats& stats,
                     const TrainOptions& opt);

  BoundaryMetrics evaluate(const std::vector<data::LabeledTokenSeq>& eval_set,
                           const data::Vocabulary& vocab) const;  // throws EmptyEvalSet

  // Fraction of windows whose thresholded decision matches its label.
  double window_accuracy(const std::vector<data::Sample>& samples) const;

  // Writes the weight file at `path` and a `path+".meta"` sidecar holding
  // the architecture configuration.
  void save(const std::filesystem::path& path, bool quantized = false) const;
  static BoundaryModel load(const std::filesystem::path& path);

 private:
  nn::Var<float> forward(const std::vector<int>& ids) const;

  BoundaryConfig cfg_;
  nn::ParamStore params_;
};

struct SweepPoint {
  int window = 0;
  int offset = 0;
  double accuracy = 0;  // held-out window-decision accuracy, percent
};

// Trains one fixed-budget model per window size (offset = ceil(2W/3)) and
// reports held-out accuracy. Every 5th document is held out.
std::vector<SweepPoint> window_sweep(const std::vector<data::LabeledTokenSeq>& labeled,
                                     const std::vector<int>& sizes, const BoundaryConfig& base,
                                     const TrainOptions& opt);

}  // namespace emojin::boundary
