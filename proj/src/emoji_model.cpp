#include "emojin/emoji_model.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emojin/kvfile.hpp"

namespace emojin::emoji {

using nn::Tensor;
using nn::fill_glorot;
using nn::fill_uniform;

// --- label set ---------------------------------------------------------------

EmojiLabelSet EmojiLabelSet::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read label file: " + path.string());
  std::vector<EmojiLabel> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw std::runtime_error("label file: expected `emoji<TAB>category<TAB>name`: " + line);
    EmojiLabel l;
    l.glyph = line.substr(0, t1);
    l.category = line.substr(t1 + 1, t2 - t1 - 1);
    l.name = line.substr(t2 + 1);
    if (l.glyph.empty() || l.category.empty())
      throw std::runtime_error("label file: empty field: " + line);
    entries.push_back(std::move(l));
  }
  if (static_cast<int>(entries.size()) != kLabelCount)
    throw std::runtime_error("label file must carry exactly " + std::to_string(kLabelCount) +
                             " labels, found " + std::to_string(entries.size()));
  return from_entries(std::move(entries));
}

EmojiLabelSet EmojiLabelSet::from_entries(std::vector<EmojiLabel> entries) {
  if (entries.empty()) throw std::runtime_error("label set must be non-empty");
  EmojiLabelSet s;
  s.labels_ = std::move(entries);
  return s;
}

int EmojiLabelSet::index_of(const std::string& glyph) const {
  for (size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i].glyph == glyph) return static_cast<int>(i);
  return -1;
}

// --- config -------------------------------------------------------------------

std::vector<int> char_ids(const std::string& word, int max_len) {
  std::vector<int> ids;
  ids.reserve(std::min<size_t>(word.size(), static_cast<size_t>(max_len)));
  for (char c : word) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(c >= 'a' && c <= 'z' ? c - 'a' + 1 : 27);
  }
  if (ids.empty()) ids.push_back(27);
  return ids;
}

void AcaConfig::validate() const {
  if (vocab_size < 2) throw InvalidConfig("vocabulary must hold at least <pad> and <unk>");
  if (word_emb <= 0 || char_emb <= 0) throw InvalidConfig("embedding dims must be positive");
  if (char_kernels.empty()) throw InvalidConfig("at least one char kernel required");
  for (auto [w, f] : char_kernels)
    if (w < 1 || f < 1) throw InvalidConfig("char kernel widths and filter counts must be positive");
  if (lstm1 <= 0 || lstm2 <= 0) throw InvalidConfig("lstm sizes must be positive");
  if (attn_dim < 0) throw InvalidConfig("attention dim must be >= 0");
  if (classes < 2) throw InvalidConfig("need at least two classes");
  if (max_word_len < 1) throw InvalidConfig("max word length must be positive");
}

const char* emoji_arch_name(EmojiArch a) {
  switch (a) {
    case EmojiArch::ACA: return "aca";
    case EmojiArch::BOW: return "bow";
    case EmojiArch::LSTM_CHAR: return "lstm_char";
    case EmojiArch::LSTM_WORD: return "lstm_word";
  }
  return "aca";
}

EmojiArch emoji_arch_from_name(const std::string& name) {
  if (name == "aca") return EmojiArch::ACA;
  if (name == "bow") return EmojiArch::BOW;
  if (name == "lstm_char") return EmojiArch::LSTM_CHAR;
  if (name == "lstm_word") return EmojiArch::LSTM_WORD;
  throw InvalidConfig("unknown emoji architecture: " + name);
}

// --- model ---------------------------------------------------------------------

EmojiModel EmojiModel::build(EmojiArch arch, const AcaConfig& cfg, unsigned seed) {
  cfg.validate();
  EmojiModel m;
  m.arch_ = arch;
  m.cfg_ = cfg;
  std::mt19937 rng(seed);
  auto& store = m.params_;

  auto make_word_emb = [&] {
    Tensor t = Tensor::zeros({cfg.vocab_size, cfg.word_emb});
    fill_uniform(t, rng, -0.05f, 0.05f);
    store.create("word_emb.table", std::move(t));
  };
  auto make_out = [&](int in_dim) {
    Tensor w = Tensor::zeros({in_dim, cfg.classes});
    fill_glorot(w, rng, in_dim, cfg.classes);
    store.create("out.w", std::move(w));
    store.create("out.b", Tensor::zeros({cfg.classes}));
  };

  switch (arch) {
    case EmojiArch::ACA: {
      make_word_emb();
      nn::char_cnn_weights(store, "chars", kCharVocab, cfg.char_emb, cfg.char_kernels, rng);
      nn::feature_attention_weights(store, "fuse", cfg.word_emb, cfg.char_features(), rng);
      nn::lstm_weights(store, "lstm1", cfg.fused_dim(), cfg.lstm1, rng);
      nn::lstm_weights(store, "lstm2", cfg.lstm1, cfg.lstm2, rng);
      int attn = cfg.attn_dim > 0 ? cfg.attn_dim : cfg.concat_dim();
      nn::temporal_attention_weights(store, "attn", cfg.concat_dim(), attn, rng);
      make_out(cfg.concat_dim());
      break;
    }
    case EmojiArch::BOW: {
      make_out(cfg.vocab_size);
      break;
    }
    case EmojiArch::LSTM_WORD: {
      make_word_emb();
      nn::lstm_weights(store, "lstm1", cfg.word_emb, cfg.lstm1, rng);
      int attn = cfg.attn_dim > 0 ? cfg.attn_dim : cfg.lstm1;
      nn::temporal_attention_weights(store, "attn", cfg.lstm1, attn, rng);
      make_out(cfg.lstm1);
      break;
    }
    case EmojiArch::LSTM_CHAR: {
      nn::char_cnn_weights(store, "chars", kCharVocab, cfg.char_emb, cfg.char_kernels, rng);
      nn::lstm_weights(store, "lstm1", cfg.char_features(), cfg.lstm1, rng);
      int attn = cfg.attn_dim > 0 ? cfg.attn_dim : cfg.lstm1;
      nn::temporal_attention_weights(store, "attn", cfg.lstm1, attn, rng);
      make_out(cfg.lstm1);
      break;
    }
  }
  return m;
}

nn::Var<float> EmojiModel::logits(const std::vector<std::string>& words,
                                  const data::Vocabulary& vocab) const {
  if (words.empty()) throw EmptySubpart("cannot predict an emoji for an empty subpart");

  auto char_weights = [&] {
    nn::CharCnnWeights<float> w;
    w.char_emb = params_.get("chars.char_emb");
    for (auto [width, filters] : cfg_.char_kernels) {
      nn::CharCnnWeights<float>::Branch br;
      br.width = width;
      br.filters = filters;
      br.w = params_.get("chars.conv" + std::to_string(width) + ".w");
      br.b = params_.get("chars.conv" + std::to_string(width) + ".b");
      w.branches.push_back(br);
      w.feature_dim += filters;
    }
    return w;
  };
  auto lstm1_weights = [&] {
    return nn::LstmWeights<float>{params_.get("lstm1.wx"), params_.get("lstm1.wh"),
                                  params_.get("lstm1.b"), cfg_.lstm1};
  };
  auto attn_weights = [&] {
    return nn::TemporalAttentionWeights<float>{params_.get("attn.w"), params_.get("attn.u")};
  };
  auto out = [&](const nn::Var<float>& x) {
    return nn::dense(x, params_.get("out.w"), params_.get("out.b"));
  };

  switch (arch_) {
    case EmojiArch::ACA: {
      auto cw = char_weights();
      nn::FeatureAttentionWeights<float> fw{params_.get("fuse.word_scorer"),
                                            params_.get("fuse.char_scorer"),
                                            params_.get("fuse.bias")};
      const auto& emb = params_.get("word_emb.table");
      std::vector<nn::Var<float>> fused;
      fused.reserve(words.size());
      for (const auto& w : words) {
        auto wv = nn::gather_rows(emb, std::vector<int>{vocab.id(w)});
        auto cv = nn::char_cnn(cw, char_ids(w, cfg_.max_word_len));
        fused.push_back(nn::feature_attention(fw, wv, cv));
      }
      auto h1 = nn::lstm_run(lstm1_weights(), fused, false);
      nn::LstmWeights<float> l2{params_.get("lstm2.wx"), params_.get("lstm2.wh"),
                                params_.get("lstm2.b"), cfg_.lstm2};
      auto h2 = nn::lstm_run(l2, h1, false);
      std::vector<nn::Var<float>> steps;
      steps.reserve(words.size());
      for (size_t t = 0; t < words.size(); ++t)
        steps.push_back(nn::concat_cols<float>({fused[t], h1[t], h2[t]}));
      auto ctx = nn::temporal_attention(attn_weights(), nn::concat_rows(steps));
      return out(ctx);
    }
    case EmojiArch::BOW: {
      Tensor counts = Tensor::zeros({1, cfg_.vocab_size});
      for (const auto& w : words) counts.data[static_cast<size_t>(vocab.id(w))] += 1.0f;
      return out(nn::constant(std::move(counts)));
    }
    case EmojiArch::LSTM_WORD: {
      const auto& emb = params_.get("word_emb.table");
      std::vector<nn::Var<float>> xs;
      xs.reserve(words.size());
      for (const auto& w : words) xs.push_back(nn::gather_rows(emb, std::vector<int>{vocab.id(w)}));
      auto h = nn::lstm_run(lstm1_weights(), xs, false);
      auto ctx = nn::temporal_attention(attn_weights(), nn::concat_rows(h));
      return out(ctx);
    }
    case EmojiArch::LSTM_CHAR: {
      auto cw = char_weights();
      std::vector<nn::Var<float>> xs;
      xs.reserve(words.size());
      for (const auto& w : words) xs.push_back(nn::char_cnn(cw, char_ids(w, cfg_.max_word_len)));
      auto h = nn::lstm_run(lstm1_weights(), xs, false);
      auto ctx = nn::temporal_attention(attn_weights(), nn::concat_rows(h));
      return out(ctx);
    }
  }
  throw InvalidConfig("unreachable architecture");
}

namespace {

EmojiDistribution distribution_from_logits(const Tensor& logit_row) {
  EmojiDistribution d;
  size_t k = logit_row.data.size();
  d.probabilities.resize(k);
  float mx = *std::max_element(logit_row.data.begin(), logit_row.data.end());
  double sum = 0;
  for (size_t i = 0; i < k; ++i) {
    d.probabilities[i] = std::exp(logit_row.data[i] - mx);
    sum += d.probabilities[i];
  }
  for (auto& p : d.probabilities) p = static_cast<float>(p / sum);
  d.ranked.resize(k);
  std::iota(d.ranked.begin(), d.ranked.end(), 0);
  std::sort(d.ranked.begin(), d.ranked.end(), [&](int a, int b) {
    if (d.probabilities[static_cast<size_t>(a)] != d.probabilities[static_cast<size_t>(b)])
      return d.probabilities[static_cast<size_t>(a)] > d.probabilities[static_cast<size_t>(b)];
    return a < b;
  });
  return d;
}

}  // namespace

EmojiDistribution EmojiModel::predict(const std::vector<std::string>& words,
                                      const data::Vocabulary& vocab) const {
  return distribution_from_logits(logits(words, vocab)->val);
}

EmojiDistribution EmojiModel::predict_topk(const std::vector<std::string>& words,
                                           const data::Vocabulary& vocab, int k) const {
  if (k < 1 || k > cfg_.classes)
    throw std::invalid_argument("k must lie in [1, " + std::to_string(cfg_.classes) + "]");
  EmojiDistribution d = predict(words, vocab);
  d.ranked.resize(static_cast<size_t>(k));
  return d;
}

std::vector<EmojiSample> load_emoji_samples(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read training data: " + path.string());
  std::vector<EmojiSample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected `label_index<TAB>text`");
    EmojiSample s;
    s.label = std::stoi(line.substr(0, tab));
    s.words = text::tokenize(line.substr(tab + 1)).words();
    if (s.words.empty()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

nn::TrainHistory EmojiModel::train(const std::vector<EmojiSample>& samples,
                                   const data::Vocabulary& vocab, const EmojiTrainOptions& opt) {
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  for (const auto& s : samples)
    if (s.label < 0 || s.label >= cfg_.classes)
      throw std::invalid_argument("label " + std::to_string(s.label) + " outside [0, " +
                                  std::to_string(cfg_.classes) + ")");

  std::mt19937 rng(opt.seed);
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  nn::Adam adam(opt.adam);
  nn::TrainHistory hist;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (opt.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::int64_t correct = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch));
      params_.zero_grads();
      nn::Var<float> batch_loss;
      for (size_t j = start; j < end; ++j) {
        const auto& s = samples[order[j]];
        auto lg = logits(s.words, vocab);
        const auto& row = lg->val.data;
        size_t arg = static_cast<size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        if (static_cast<int>(arg) == s.label) ++correct;
        auto term = nn::cross_entropy(lg, s.label);
        batch_loss = batch_loss ? nn::add(batch_loss, term) : term;
      }
      auto loss = nn::scale(batch_loss, 1.0f / static_cast<float>(end - start));
      loss_sum += static_cast<double>(loss->val.data[0]) * static_cast<double>(end - start);
      nn::backward(loss);
      adam.step(params_);
    }
    nn::EpochStats es;
    es.loss = static_cast<float>(loss_sum / static_cast<double>(samples.size()));
    es.accuracy = static_cast<float>(correct) / static_cast<float>(samples.size());
    hist.push_back(es);
    if (opt.verbose)
      std::fprintf(stderr, "epoch %d loss %.5f acc %.4f\n", epoch + 1, es.loss, es.accuracy);
    if (es.accuracy >= opt.stop_at_accuracy) break;
  }
  return hist;
}

EmojiMetrics EmojiModel::evaluate(const std::vector<EmojiSample>& samples,
                                  const data::Vocabulary& vocab) const {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  std::int64_t hit1 = 0, hit5 = 0;
  std::vector<std::int64_t> tp(static_cast<size_t>(cfg_.classes), 0);
  std::vector<std::int64_t> fp(static_cast<size_t>(cfg_.classes), 0);
  std::vector<std::int64_t> fn(static_cast<size_t>(cfg_.classes), 0);
  std::vector<std::int64_t> support(static_cast<size_t>(cfg_.classes), 0);

  int k5 = std::min(5, cfg_.classes);
  for (const auto& s : samples) {
    EmojiDistribution d = predict(s.words, vocab);
    int top = d.ranked[0];
    if (top == s.label) ++hit1;
    if (std::find(d.ranked.begin(), d.ranked.begin() + k5, s.label) != d.ranked.begin() + k5)
      ++hit5;
    ++support[static_cast<size_t>(s.label)];
    if (top == s.label) {
      ++tp[static_cast<size_t>(top)];
    } else {
      ++fp[static_cast<size_t>(top)];
      ++fn[static_cast<size_t>(s.label)];
    }
  }

  double f1_sum = 0;
  std::int64_t total = static_cast<std::int64_t>(samples.size());
  for (int c = 0; c < cfg_.classes; ++c) {
    auto uc = static_cast<size_t>(c);
    if (support[uc] == 0) continue;
    double p = tp[uc] + fp[uc] > 0 ? static_cast<double>(tp[uc]) / static_cast<double>(tp[uc] + fp[uc]) : 0.0;
    double r = static_cast<double>(tp[uc]) / static_cast<double>(support[uc]);
    double f1 = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    f1_sum += f1 * static_cast<double>(support[uc]);
  }

  EmojiMetrics m;
  m.top1 = 100.0 * static_cast<double>(hit1) / static_cast<double>(total);
  m.top5 = 100.0 * static_cast<double>(hit5) / static_cast<double>(total);
  m.weighted_f1 = 100.0 * f1_sum / static_cast<double>(total);
  return m;
}

void EmojiModel::save(const std::filesystem::path& path, bool quantized) const {
  auto tensors = params_.tensors();
  if (quantized)
    nn::save_weights_quantized(path, tensors);
  else
    nn::save_weights(path, tensors);

  std::ostringstream kernels;
  for (size_t i = 0; i < cfg_.char_kernels.size(); ++i) {
    if (i) kernels << ',';
    kernels << cfg_.char_kernels[i].first << ':' << cfg_.char_kernels[i].second;
  }
  std::map<std::string, std::string> meta;
  meta["kind"] = "emoji";
  meta["arch"] = emoji_arch_name(arch_);
  meta["vocab_size"] = std::to_string(cfg_.vocab_size);
  meta["word_emb"] = std::to_string(cfg_.word_emb);
  meta["char_emb"] = std::to_string(cfg_.char_emb);
  meta["char_kernels"] = kernels.str();
  meta["lstm1"] = std::to_string(cfg_.lstm1);
  meta["lstm2"] = std::to_string(cfg_.lstm2);
  meta["attn_dim"] = std::to_string(cfg_.attn_dim);
  meta["classes"] = std::to_string(cfg_.classes);
  meta["max_word_len"] = std::to_string(cfg_.max_word_len);
  util::write_kv(path.string() + ".meta", meta);
}

EmojiModel EmojiModel::load(const std::filesystem::path& path) {
  auto meta = util::read_kv(path.string() + ".meta");
  if (meta.count("kind") && meta.at("kind") != "emoji")
    throw InvalidConfig("weight file is not an emoji model: " + path.string());
  AcaConfig cfg;
  cfg.vocab_size = std::stoi(meta.at("vocab_size"));
  cfg.word_emb = std::stoi(meta.at("word_emb"));
  cfg.char_emb = std::stoi(meta.at("char_emb"));
  cfg.char_kernels.clear();
  std::istringstream ks(meta.at("char_kernels"));
  std::string part;
  while (std::getline(ks, part, ',')) {
    size_t colon = part.find(':');
    if (colon == std::string::npos) throw InvalidConfig("malformed char_kernels in meta");
    cfg.char_kernels.emplace_back(std::stoi(part.substr(0, colon)), std::stoi(part.substr(colon + 1)));
  }
  cfg.lstm1 = std::stoi(meta.at("lstm1"));
  cfg.lstm2 = std::stoi(meta.at("lstm2"));
  cfg.attn_dim = std::stoi(meta.at("attn_dim"));
  cfg.classes = std::stoi(meta.at("classes"));
  cfg.max_word_len = std::stoi(meta.at("max_word_len"));
  EmojiModel m = build(emoji_arch_from_name(meta.at("arch")), cfg, 0);
  m.params_.load(nn::load_weights(path).tensors);
  return m;
}

}  // namespace emojin::emoji
