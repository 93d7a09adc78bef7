#include "emojin/boundary_model.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "emojin/kvfile.hpp"

namespace emojin::boundary {

using nn::Tensor;
using nn::fill_glorot;
using nn::fill_uniform;

const char* arch_name(Arch a) { return a == Arch::CNN ? "cnn" : "bilstm"; }

Arch arch_from_name(const std::string& name) {
  if (name == "cnn") return Arch::CNN;
  if (name == "bilstm") return Arch::BiLSTM;
  throw InvalidConfig("unknown architecture: " + name);
}

void BoundaryConfig::validate() const {
  if (window < 2) throw InvalidConfig("window must be >= 2");
  if (offset < 1 || offset > window) throw InvalidConfig("offset must lie in [1, window]");
  if (vocab_size < 2) throw InvalidConfig("vocabulary must hold at least <pad> and <unk>");
  if (emb_dim <= 0) throw InvalidConfig("embedding dimension must be positive");
  if (threshold <= 0.0f || threshold >= 1.0f) throw InvalidConfig("threshold must lie in (0, 1)");
  if (class_weight_ratio && *class_weight_ratio <= 0.0f)
    throw InvalidConfig("class weight ratio must be positive");
  if (arch == Arch::CNN) {
    if (filters <= 0 || kernel < 1 || dilation < 1 || pool < 1)
      throw InvalidConfig("conv hyperparameters must be positive");
    if (conv_out_len() < 1)
      throw InvalidConfig("window too short for kernel " + std::to_string(kernel) + " dilation " +
                          std::to_string(dilation));
    if (pool > conv_out_len()) throw InvalidConfig("pool size exceeds conv output length");
  } else {
    if (bilstm_hidden <= 0) throw InvalidConfig("bilstm hidden size must be positive");
  }
}

BoundaryConfig adapt_geometry(BoundaryConfig cfg) {
  cfg.kernel = std::min(cfg.kernel, cfg.window);
  if (cfg.window < (cfg.kernel - 1) * cfg.dilation + 1) cfg.dilation = 1;
  cfg.pool = std::max(1, std::min(cfg.pool, cfg.conv_out_len()));
  return cfg;
}

namespace {

std::vector<int> to_ids(const std::vector<std::uint32_t>& window) {
  std::vector<int> ids(window.size());
  for (size_t i = 0; i < window.size(); ++i) ids[i] = static_cast<int>(window[i]);
  return ids;
}

}  // namespace

BoundaryModel BoundaryModel::build(const BoundaryConfig& cfg, unsigned seed) {
  cfg.validate();
  BoundaryModel m;
  m.cfg_ = cfg;
  std::mt19937 rng(seed);

  Tensor emb = Tensor::zeros({cfg.vocab_size, cfg.emb_dim});
  fill_uniform(emb, rng, -0.05f, 0.05f);
  m.params_.create("emb.table", std::move(emb));

  if (cfg.arch == Arch::CNN) {
    Tensor cw = Tensor::zeros({cfg.kernel * cfg.emb_dim, cfg.filters});
    fill_glorot(cw, rng, cfg.kernel * cfg.emb_dim, cfg.filters);
    m.params_.create("conv.w", std::move(cw));
    m.params_.create("conv.b", Tensor::zeros({cfg.filters}));
    int flat = (cfg.conv_out_len() / cfg.pool) * cfg.filters;
    Tensor ow = Tensor::zeros({flat, 1});
    fill_glorot(ow, rng, flat, 1);
    m.params_.create("out.w", std::move(ow));
    m.params_.create("out.b", Tensor::zeros({1}));
  } else {
    nn::lstm_weights(m.params_, "lstm_fwd", cfg.emb_dim, cfg.bilstm_hidden, rng);
    nn::lstm_weights(m.params_, "lstm_bwd", cfg.emb_dim, cfg.bilstm_hidden, rng);
    Tensor ow = Tensor::zeros({2 * cfg.bilstm_hidden, 1});
    fill_glorot(ow, rng, 2 * cfg.bilstm_hidden, 1);
    m.params_.create("out.w", std::move(ow));
    m.params_.create("out.b", Tensor::zeros({1}));
  }
  return m;
}

nn::Var<float> BoundaryModel::forward(const std::vector<int>& ids) const {
  const auto& emb = params_.get("emb.table");
  if (cfg_.arch == Arch::CNN) {
    auto x = nn::gather_rows(emb, ids);
    auto c = nn::conv1d(x, params_.get("conv.w"), params_.get("conv.b"), cfg_.kernel, cfg_.dilation);
    auto p = cfg_.pool > 1 ? nn::maxpool1d(c, cfg_.pool) : c;
    auto flat = nn::reshape(p, {1, static_cast<int>(p->val.size())});
    return nn::sigmoid(nn::dense(flat, params_.get("out.w"), params_.get("out.b")));
  }
  nn::LstmWeights<float> fwd{params_.get("lstm_fwd.wx"), params_.get("lstm_fwd.wh"),
                             params_.get("lstm_fwd.b"), cfg_.bilstm_hidden};
  nn::LstmWeights<float> bwd{params_.get("lstm_bwd.wx"), params_.get("lstm_bwd.wh"),
                             params_.get("lstm_bwd.b"), cfg_.bilstm_hidden};
  std::vector<nn::Var<float>> xs;
  xs.reserve(ids.size());
  for (int id : ids) xs.push_back(nn::gather_rows(emb, std::vector<int>{id}));
  auto hs = nn::bilstm_run(fwd, bwd, xs);
  const auto& center = hs[static_cast<size_t>(cfg_.offset - 1)];
  return nn::sigmoid(nn::dense(center, params_.get("out.w"), params_.get("out.b")));
}

float BoundaryModel::predict_window(const std::vector<std::uint32_t>& window) const {
  if (static_cast<int>(window.size()) != cfg_.window)
    throw WrongWindowWidth("expected window of " + std::to_string(cfg_.window) + " ids, got " +
                           std::to_string(window.size()));
  return forward(to_ids(window))->val.data[0];
}

pos::BoundarySet BoundaryModel::predict_boundaries(const text::TokenSeq& seq,
                                                   const data::Vocabulary& vocab) const {
  pos::BoundarySet out;
  std::vector<int> ids;
  ids.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) ids.push_back(vocab.id(t.surface));
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    auto window = data::window_at(ids, i, cfg_.window, cfg_.offset);
    if (predict_window(window) >= cfg_.threshold) out.insert(i);
  }
  return out;
}

TrainHistory BoundaryModel::train(const std::vector<data::Sample>& samples,
                                  const data::ClassStats& stats, const TrainOptions& opt) {
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  float neg_weight = 1.0f;
  if (cfg_.class_weighting) {
    if (cfg_.class_weight_ratio) {
      neg_weight = *cfg_.class_weight_ratio;
    } else {
      if (stats.no_boundary == 0)
        throw nn::DegenerateStats("cannot weight loss: no negative samples (M == 0)");
      neg_weight = static_cast<float>(static_cast<double>(stats.boundary) /
                                      static_cast<double>(stats.no_boundary));
    }
  }

  std::mt19937 rng(opt.seed);
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  nn::Adam adam(opt.adam);
  TrainHistory hist;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (opt.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::int64_t correct = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch));
      params_.zero_grads();
      std::vector<nn::Var<float>> probs;
      std::vector<bool> labels;
      probs.reserve(end - start);
      for (size_t j = start; j < end; ++j) {
        const auto& s = samples[order[j]];
        auto p = forward(to_ids(s.window));
        if ((p->val.data[0] >= cfg_.threshold) == s.label) ++correct;
        probs.push_back(std::move(p));
        labels.push_back(s.label);
      }
      auto loss = nn::weighted_bce_fixed(probs, labels, neg_weight);
      loss_sum += static_cast<double>(loss->val.data[0]) * static_cast<double>(end - start);
      nn::backward(loss);
      adam.step(params_);
    }
    EpochStats es;
    es.loss = static_cast<float>(loss_sum / static_cast<double>(samples.size()));
    es.accuracy = static_cast<float>(correct) / static_cast<float>(samples.size());
    hist.push_back(es);
    if (opt.verbose)
      std::fprintf(stderr, "epoch %d loss %.5f acc %.4f\n", epoch + 1, es.loss, es.accuracy);
    if (es.accuracy >= opt.stop_at_accuracy) break;
  }
  return hist;
}

BoundaryMetrics BoundaryModel::evaluate(const std::vector<data::LabeledTokenSeq>& eval_set,
                                        const data::Vocabulary& vocab) const {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t multiline = 0, multiline_exact = 0;
  std::int64_t tokens_seen = 0;

  for (const auto& seq : eval_set) {
    std::vector<int> ids;
    ids.reserve(seq.tokens.tokens.size());
    for (const auto& t : seq.tokens.tokens) ids.push_back(vocab.id(t.surface));
    tokens_seen += static_cast<std::int64_t>(ids.size());

    bool exact = true;
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
      bool gold = seq.boundary_after[static_cast<size_t>(i)];
      bool pred = predict_window(data::window_at(ids, i, cfg_.window, cfg_.offset)) >= cfg_.threshold;
      if (pred && gold) ++tp;
      if (pred && !gold) ++fp;
      if (!pred && gold) ++fn;
      if (!pred && !gold) ++tn;
      if (pred != gold) exact = false;
    }
    if (data::count_subparts(seq) >= 2) {
      ++multiline;
      if (exact) ++multiline_exact;
    }
  }
  if (tokens_seen == 0) throw EmptyEvalSet("evaluation set has no tokens");

  BoundaryMetrics m;
  double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.precision = 100.0 * p;
  m.recall = 100.0 * r;
  m.f1 = p + r > 0 ? 100.0 * 2.0 * p * r / (p + r) : 0.0;
  m.accuracy = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(tokens_seen);
  m.multiline_accuracy =
      multiline > 0 ? 100.0 * static_cast<double>(multiline_exact) / static_cast<double>(multiline) : 0.0;
  return m;
}

double BoundaryModel::window_accuracy(const std::vector<data::Sample>& samples) const {
  if (samples.empty()) throw EmptyEvalSet("no samples");
  std::int64_t correct = 0;
  for (const auto& s : samples)
    if (decide_window(s.window) == s.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

void BoundaryModel::save(const std::filesystem::path& path, bool quantized) const {
  auto tensors = params_.tensors();
  if (quantized)
    nn::save_weights_quantized(path, tensors);
  else
    nn::save_weights(path, tensors);
  std::map<std::string, std::string> meta;
  meta["kind"] = "boundary";
  meta["arch"] = arch_name(cfg_.arch);
  meta["window"] = std::to_string(cfg_.window);
  meta["offset"] = std::to_string(cfg_.offset);
  meta["vocab_size"] = std::to_string(cfg_.vocab_size);
  meta["emb_dim"] = std::to_string(cfg_.emb_dim);
  meta["filters"] = std::to_string(cfg_.filters);
  meta["kernel"] = std::to_string(cfg_.kernel);
  meta["dilation"] = std::to_string(cfg_.dilation);
  meta["pool"] = std::to_string(cfg_.pool);
  meta["bilstm_hidden"] = std::to_string(cfg_.bilstm_hidden);
  meta["threshold"] = std::to_string(cfg_.threshold);
  util::write_kv(path.string() + ".meta", meta);
}

BoundaryModel BoundaryModel::load(const std::filesystem::path& path) {
  auto meta = util::read_kv(path.string() + ".meta");
  if (meta.count("kind") && meta.at("kind") != "boundary")
    throw InvalidConfig("weight file is not a boundary model: " + path.string());
  BoundaryConfig cfg;
  cfg.arch = arch_from_name(meta.at("arch"));
  cfg.window = std::stoi(meta.at("window"));
  cfg.offset = std::stoi(meta.at("offset"));
  cfg.vocab_size = std::stoi(meta.at("vocab_size"));
  cfg.emb_dim = std::stoi(meta.at("emb_dim"));
  cfg.filters = std::stoi(meta.at("filters"));
  cfg.kernel = std::stoi(meta.at("kernel"));
  cfg.dilation = std::stoi(meta.at("dilation"));
  cfg.pool = std::stoi(meta.at("pool"));
  cfg.bilstm_hidden = std::stoi(meta.at("bilstm_hidden"));
  cfg.threshold = std::stof(meta.at("threshold"));
  BoundaryModel m = build(cfg, 0);
  m.params_.load(nn::load_weights(path).tensors);
  return m;
}

std::vector<SweepPoint> window_sweep(const std::vector<data::LabeledTokenSeq>& labeled,
                                     const std::vector<int>& sizes, const BoundaryConfig& base,
                                     const TrainOptions& opt) {
  std::vector<data::LabeledTokenSeq> train_docs, eval_docs;
  for (size_t i = 0; i < labeled.size(); ++i)
    (i % 5 == 4 ? eval_docs : train_docs).push_back(labeled[i]);
  if (train_docs.empty() || eval_docs.empty())
    throw EmptyEvalSet("window sweep needs at least 5 documents");

  data::VocabBuilder vb;
  for (const auto& d : train_docs) vb.add_all(d.tokens);
  data::Vocabulary vocab = vb.finish(base.vocab_size);

  std::vector<SweepPoint> out;
  for (int w : sizes) {
    BoundaryConfig cfg = base;
    cfg.window = w;
    cfg.offset = (2 * w + 2) / 3;  // ceil(2W/3): keeps the left:right context ratio
    cfg.vocab_size = vocab.size();
    cfg = adapt_geometry(cfg);
    cfg.validate();

    std::vector<data::Sample> train_samples, eval_samples;
    for (const auto& d : train_docs) {
      auto s = data::make_windows(d, vocab, cfg.window, cfg.offset);
      train_samples.insert(train_samples.end(), s.begin(), s.end());
    }
    for (const auto& d : eval_docs) {
      auto s = data::make_windows(d, vocab, cfg.window, cfg.offset);
      eval_samples.insert(eval_samples.end(), s.begin(), s.end());
    }

    BoundaryModel model = BoundaryModel::build(cfg, opt.seed);
    model.train(train_samples, data::class_stats(train_samples), opt);

    SweepPoint pt;
    pt.window = w;
    pt.offset = cfg.offset;
    pt.accuracy = 100.0 * model.window_accuracy(eval_samples);
    out.push_back(pt);
  }
  return out;
}

}  // namespace emojin::boundary
