#include "emojin/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace emojin::pipeline {

std::string render(const AnnotatedText& annotated) {
  std::ostringstream os;
  size_t next = 0;
  for (size_t i = 0; i < annotated.words.size(); ++i) {
    if (i) os << ' ';
    os << annotated.words[i];
    while (next < annotated.insertions.size() &&
           annotated.insertions[next].after_token == static_cast<int>(i)) {
      os << ' ' << annotated.insertions[next].glyph;
      ++next;
    }
  }
  return os.str();
}

std::vector<GoldMessage> load_gold(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read gold file: " + path.string());
  std::vector<GoldMessage> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    GoldMessage g;
    size_t tab = line.find('\t');
    g.text = line.substr(0, tab == std::string::npos ? line.size() : tab);
    if (tab != std::string::npos && tab + 1 < line.size()) {
      std::istringstream anns(line.substr(tab + 1));
      std::string item;
      while (std::getline(anns, item, ',')) {
        size_t colon = item.find(':');
        if (colon == std::string::npos)
          throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                   ": expected pos:emoji");
        g.insertions.emplace_back(std::stoi(item.substr(0, colon)), item.substr(colon + 1));
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

Pipeline::Pipeline(boundary::BoundaryModel bmodel, data::Vocabulary bvocab,
                   emoji::EmojiModel emodel, data::Vocabulary evocab, emoji::EmojiLabelSet labels,
                   PipelineConfig cfg, text::ExpansionTable contractions,
                   text::ExpansionTable shortforms)
    : loaded_(true),
      bmodel_(std::move(bmodel)),
      bvocab_(std::move(bvocab)),
      emodel_(std::move(emodel)),
      evocab_(std::move(evocab)),
      labels_(std::move(labels)),
      cfg_(cfg),
      contractions_(std::move(contractions)),
      shortforms_(std::move(shortforms)) {
  if (cfg_.boundary_threshold) bmodel_.config().threshold = *cfg_.boundary_threshold;
}

Pipeline Pipeline::load(const std::filesystem::path& boundary_weights,
                        const std::filesystem::path& emoji_weights,
                        const std::filesystem::path& labels_path, PipelineConfig cfg,
                        text::ExpansionTable contractions, text::ExpansionTable shortforms) {
  auto bmodel = boundary::BoundaryModel::load(boundary_weights);
  auto bvocab = data::Vocabulary::load(boundary_weights.string() + ".vocab");
  auto emodel = emoji::EmojiModel::load(emoji_weights);
  auto evocab = data::Vocabulary::load(emoji_weights.string() + ".vocab");
  auto labels = emoji::EmojiLabelSet::load(labels_path);
  return Pipeline(std::move(bmodel), std::move(bvocab), std::move(emodel), std::move(evocab),
                  std::move(labels), cfg, std::move(contractions), std::move(shortforms));
}

text::TokenSeq Pipeline::preprocess(const std::string& input) const {
  text::TokenSeq seq = text::tokenize(input);
  if (shortforms_.size() > 0) seq = text::expand_shortforms(seq, shortforms_);
  return text::normalize(seq, contractions_);
}

AnnotatedText Pipeline::annotate(const std::string& input) const {
  if (!loaded_) throw ModelNotLoaded("pipeline has no models loaded");
  AnnotatedText out;
  out.original = input;
  text::TokenSeq seq = preprocess(input);
  out.words = seq.words();
  if (out.words.empty()) return out;

  pos::BoundarySet bounds = bmodel_.predict_boundaries(seq, bvocab_);
  int n = static_cast<int>(out.words.size());
  int start = 0;
  for (int i = 0; i < n; ++i) {
    bool cut = (i == n - 1) || bounds.contains(i);
    if (!cut) continue;
    std::vector<std::string> subpart(out.words.begin() + start, out.words.begin() + i + 1);
    emoji::EmojiDistribution d = emodel_.predict_topk(subpart, evocab_, 1);
    int top = d.ranked[0];
    float p = d.probabilities[static_cast<size_t>(top)];
    if (p >= cfg_.emoji_threshold) {
      Insertion ins;
      ins.after_token = i;
      ins.label = top;
      ins.glyph = labels_.at(top).glyph;
      ins.probability = p;
      out.insertions.push_back(std::move(ins));
    }
    start = i + 1;
  }
  return out;
}

double overall_accuracy(const std::vector<AnnotatedText>& predictions,
                        const std::vector<GoldMessage>& gold,
                        const emoji::EmojiLabelSet& labels) {
  if (predictions.size() != gold.size())
    throw std::invalid_argument("prediction/gold count mismatch");
  if (gold.empty()) throw std::invalid_argument("no gold messages");

  auto category = [&](const std::string& glyph) -> std::string {
    int idx = labels.index_of(glyph);
    if (idx < 0) throw std::runtime_error("emoji not in label set: " + glyph);
    return labels.category_of(idx);
  };

  std::int64_t correct = 0;
  for (size_t m = 0; m < gold.size(); ++m) {
    const auto& pred = predictions[m].insertions;
    const auto& want = gold[m].insertions;
    if (pred.size() != want.size()) continue;
    bool ok = true;
    for (const auto& [pos, glyph] : want) {
      auto it = std::find_if(pred.begin(), pred.end(),
                             [pos](const Insertion& ins) { return ins.after_token == pos; });
      if (it == pred.end() || category(it->glyph) != category(glyph)) {
        ok = false;
        break;
      }
    }
    if (ok) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(gold.size());
}

namespace {

StageStats summarize(std::vector<double> per_word_ms) {
  std::sort(per_word_ms.begin(), per_word_ms.end());
  StageStats s;
  size_t n = per_word_ms.size();
  double sum = 0;
  for (double v : per_word_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(n);
  s.median_ms = n % 2 ? per_word_ms[n / 2] : 0.5 * (per_word_ms[n / 2 - 1] + per_word_ms[n / 2]);
  size_t p99 = static_cast<size_t>(std::min<double>(static_cast<double>(n - 1), std::ceil(0.99 * static_cast<double>(n)) - 1));
  s.p99_ms = per_word_ms[p99];
  return s;
}

}  // namespace

BenchReport bench(const Pipeline& pipeline, const std::vector<std::string>& texts, int iterations,
                  int warmup) {
  if (texts.empty()) throw std::invalid_argument("bench: no texts");
  using clock = std::chrono::steady_clock;

  struct Prepared {
    text::TokenSeq seq;
    pos::BoundarySet bounds;
    std::string raw;
    int words;
  };
  std::vector<Prepared> prep;
  for (const auto& t : texts) {
    Prepared p;
    p.raw = t;
    p.seq = pipeline.preprocess(t);
    if (p.seq.tokens.empty()) continue;
    p.bounds = pipeline.boundary_model().predict_boundaries(p.seq, pipeline.boundary_vocab());
    p.words = static_cast<int>(p.seq.tokens.size());
    prep.push_back(std::move(p));
  }
  if (prep.empty()) throw std::invalid_argument("bench: all texts empty after normalization");

  auto emoji_stage = [&](const Prepared& p) {
    int n = p.words;
    int start = 0;
    for (int i = 0; i < n; ++i) {
      if (i != n - 1 && !p.bounds.contains(i)) continue;
      std::vector<std::string> subpart;
      for (int j = start; j <= i; ++j) subpart.push_back(p.seq.tokens[static_cast<size_t>(j)].surface);
      (void)pipeline.emoji_model().predict_topk(subpart, pipeline.emoji_vocab(), 1);
      start = i + 1;
    }
  };

  std::vector<double> b_ms, e_ms, f_ms;
  b_ms.reserve(static_cast<size_t>(iterations));
  e_ms.reserve(static_cast<size_t>(iterations));
  f_ms.reserve(static_cast<size_t>(iterations));

  for (int it = -warmup; it < iterations; ++it) {
    const Prepared& p = prep[static_cast<size_t>((it + warmup)) % prep.size()];

    auto t0 = clock::now();
    (void)pipeline.boundary_model().predict_boundaries(p.seq, pipeline.boundary_vocab());
    auto t1 = clock::now();
    emoji_stage(p);
    auto t2 = clock::now();
    (void)pipeline.annotate(p.raw);
    auto t3 = clock::now();

    if (it < 0) continue;
    auto ms = [](auto a, auto b) {
      return std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(b - a).count();
    };
    b_ms.push_back(ms(t0, t1) / p.words);
    e_ms.push_back(ms(t1, t2) / p.words);
    f_ms.push_back(ms(t2, t3) / p.words);
  }

  BenchReport r;
  r.boundary = summarize(std::move(b_ms));
  r.emoji = summarize(std::move(e_ms));
  r.full = summarize(std::move(f_ms));
  return r;
}

}  // namespace emojin::pipeline
