// emojin command line: dataset building, training, evaluation, annotation,
// window sweeps, benchmarking, quantization, and parameter counting.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error. Results go to
// stdout, diagnostics to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emojin/boundary_model.hpp"
#include "emojin/dataset.hpp"
#include "emojin/emoji_model.hpp"
#include "emojin/pipeline.hpp"

namespace fs = std::filesystem;
using namespace emojin;

namespace {

text::ExpansionTable load_table_or_empty(const std::string& path) {
  if (path.empty()) return {};
  return text::ExpansionTable::load(path);
}

void copy_sidecar(const fs::path& from, const fs::path& to) {
  if (fs::exists(from) && fs::weakly_canonical(from) != fs::weakly_canonical(to))
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

struct BuildDataArgs {
  std::string corpus, out, lexicon, contractions;
  int vocab_size = 20000, window = 6, offset = 4, threads = 1;
  bool multisentence_only = false;
};

int cmd_build_data(const BuildDataArgs& a) {
  auto lex = pos::TriggerLexicon::load(a.lexicon);
  auto contractions = load_table_or_empty(a.contractions);
  auto docs = data::read_lines(a.corpus);

  std::vector<data::LabeledTokenSeq> labeled;
  if (a.multisentence_only) {
    labeled = data::extract_multisentence(docs, lex, a.contractions.empty() ? nullptr : &contractions);
  } else {
    labeled = data::label_corpus(docs, lex, a.contractions.empty() ? nullptr : &contractions,
                                 a.threads);
  }

  data::VocabBuilder vb;
  for (const auto& d : labeled) vb.add_all(d.tokens);
  data::Vocabulary vocab = vb.finish(a.vocab_size);

  data::SampleCache cache;
  cache.window = a.window;
  cache.offset = a.offset;
  for (const auto& d : labeled) {
    auto s = data::make_windows(d, vocab, a.window, a.offset);
    cache.samples.insert(cache.samples.end(), s.begin(), s.end());
  }

  data::save_samples(a.out + ".samples", cache);
  vocab.save(a.out + ".vocab");

  auto stats = data::class_stats(cache.samples);
  std::printf("documents,%zu\n", labeled.size());
  std::printf("samples,%lld\n", static_cast<long long>(stats.total()));
  std::printf("boundary,%lld\n", static_cast<long long>(stats.boundary));
  std::printf("no_boundary,%lld\n", static_cast<long long>(stats.no_boundary));
  if (stats.no_boundary > 0)
    std::printf("weight_ratio,%.6f\n",
                static_cast<double>(stats.boundary) / static_cast<double>(stats.no_boundary));
  std::printf("vocab,%d\n", vocab.size());
  return 0;
}

struct TrainBoundaryArgs {
  std::string data, out, arch = "cnn", class_weight;
  int emb = 50, filters = 512, kernel = 3, dilation = 2, pool = 2, bilstm_hidden = 64;
  int epochs = 50, batch = 64;
  float lr = 1e-3f, threshold = 0.5f, stop_at = 1.0f;
  unsigned seed = 42;
  bool no_class_weight = false, verbose = false;
};

int cmd_train_boundary(const TrainBoundaryArgs& a) {
  auto cache = data::load_samples(a.data + ".samples");
  auto vocab = data::Vocabulary::load(a.data + ".vocab");

  boundary::BoundaryConfig cfg;
  cfg.arch = boundary::arch_from_name(a.arch);
  cfg.window = cache.window;
  cfg.offset = cache.offset;
  cfg.vocab_size = vocab.size();
  cfg.emb_dim = a.emb;
  cfg.filters = a.filters;
  cfg.kernel = a.kernel;
  cfg.dilation = a.dilation;
  cfg.pool = a.pool;
  cfg.bilstm_hidden = a.bilstm_hidden;
  cfg.threshold = a.threshold;
  cfg.class_weighting = !a.no_class_weight;
  if (!a.class_weight.empty()) cfg.class_weight_ratio = std::stof(a.class_weight);
  cfg = boundary::adapt_geometry(cfg);

  auto model = boundary::BoundaryModel::build(cfg, a.seed);
  boundary::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch = a.batch;
  opt.adam.lr = a.lr;
  opt.seed = a.seed;
  opt.stop_at_accuracy = a.stop_at;
  opt.verbose = a.verbose;

  auto hist = model.train(cache.samples, data::class_stats(cache.samples), opt);
  model.save(a.out);
  copy_sidecar(a.data + ".vocab", a.out + ".vocab");

  std::printf("epoch,loss,accuracy\n");
  for (size_t e = 0; e < hist.size(); ++e)
    std::printf("%zu,%.6f,%.6f\n", e + 1, hist[e].loss, hist[e].accuracy);
  return 0;
}

struct TrainEmojiArgs {
  std::string data, out, arch = "aca";
  int vocab_size = 60000, classes = 64;
  int word_emb = 16, char_emb = 8, lstm1 = 128, lstm2 = 128, attn_dim = 0, max_word_len = 24;
  int epochs = 100, batch = 32;
  float lr = 1e-3f, stop_at = 1.0f;
  unsigned seed = 42;
  bool verbose = false;
};

int cmd_train_emoji(const TrainEmojiArgs& a) {
  auto samples = emoji::load_emoji_samples(a.data);
  if (samples.empty()) throw std::runtime_error("no usable training samples in " + a.data);

  data::VocabBuilder vb;
  for (const auto& s : samples)
    for (const auto& w : s.words) vb.add(w);
  data::Vocabulary vocab = vb.finish(a.vocab_size);

  emoji::AcaConfig cfg;
  cfg.vocab_size = vocab.size();
  cfg.classes = a.classes;
  cfg.word_emb = a.word_emb;
  cfg.char_emb = a.char_emb;
  cfg.lstm1 = a.lstm1;
  cfg.lstm2 = a.lstm2;
  cfg.attn_dim = a.attn_dim;
  cfg.max_word_len = a.max_word_len;

  auto model = emoji::EmojiModel::build(emoji::emoji_arch_from_name(a.arch), cfg, a.seed);
  emoji::EmojiTrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch = a.batch;
  opt.adam.lr = a.lr;
  opt.seed = a.seed;
  opt.stop_at_accuracy = a.stop_at;
  opt.verbose = a.verbose;

  auto hist = model.train(samples, vocab, opt);
  model.save(a.out);
  vocab.save(a.out + ".vocab");

  std::printf("epoch,loss,accuracy\n");
  for (size_t e = 0; e < hist.size(); ++e)
    std::printf("%zu,%.6f,%.6f\n", e + 1, hist[e].loss, hist[e].accuracy);
  return 0;
}

struct EvalBoundaryArgs {
  std::string weights, eval, lexicon, contractions, vocab;
};

int cmd_eval_boundary(const EvalBoundaryArgs& a) {
  auto model = boundary::BoundaryModel::load(a.weights);
  auto vocab = data::Vocabulary::load(a.vocab.empty() ? a.weights + ".vocab" : a.vocab);
  auto lex = pos::TriggerLexicon::load(a.lexicon);
  auto contractions = load_table_or_empty(a.contractions);
  auto docs = data::read_lines(a.eval);
  auto labeled =
      data::label_corpus(docs, lex, a.contractions.empty() ? nullptr : &contractions, 1);

  auto m = model.evaluate(labeled, vocab);
  std::printf("precision,%.4f\n", m.precision);
  std::printf("recall,%.4f\n", m.recall);
  std::printf("f1,%.4f\n", m.f1);
  std::printf("accuracy,%.4f\n", m.accuracy);
  std::printf("multiline_accuracy,%.4f\n", m.multiline_accuracy);
  return 0;
}

struct EvalEmojiArgs {
  std::string weights, data, vocab;
};

int cmd_eval_emoji(const EvalEmojiArgs& a) {
  auto model = emoji::EmojiModel::load(a.weights);
  auto vocab = data::Vocabulary::load(a.vocab.empty() ? a.weights + ".vocab" : a.vocab);
  auto samples = emoji::load_emoji_samples(a.data);
  auto m = model.evaluate(samples, vocab);
  std::printf("top1,%.4f\n", m.top1);
  std::printf("top5,%.4f\n", m.top5);
  std::printf("weighted_f1,%.4f\n", m.weighted_f1);
  return 0;
}

struct PipelineArgs {
  std::string boundary, emoji, labels, contractions, shortforms;
  float emoji_threshold = 0.3f;
  float boundary_threshold = -1.0f;  // <0 keeps the model's own threshold
};

pipeline::Pipeline make_pipeline(const PipelineArgs& a) {
  pipeline::PipelineConfig cfg;
  cfg.emoji_threshold = a.emoji_threshold;
  if (a.boundary_threshold >= 0.0f) cfg.boundary_threshold = a.boundary_threshold;
  return pipeline::Pipeline::load(a.boundary, a.emoji, a.labels, cfg,
                                  load_table_or_empty(a.contractions),
                                  load_table_or_empty(a.shortforms));
}

int cmd_eval_pipeline(const PipelineArgs& a, const std::string& gold_path) {
  auto pipe = make_pipeline(a);
  auto gold = pipeline::load_gold(gold_path);
  std::vector<pipeline::AnnotatedText> preds;
  preds.reserve(gold.size());
  for (const auto& g : gold) preds.push_back(pipe.annotate(g.text));
  std::printf("messages,%zu\n", gold.size());
  std::printf("overall_accuracy,%.4f\n", pipeline::overall_accuracy(preds, gold, pipe.labels()));
  return 0;
}

int cmd_annotate(const PipelineArgs& a, const std::optional<std::string>& one_text) {
  auto pipe = make_pipeline(a);
  auto run = [&](const std::string& line) {
    std::printf("%s\n", pipeline::render(pipe.annotate(line)).c_str());
  };
  if (one_text) {
    run(*one_text);
  } else {
    std::string line;
    while (std::getline(std::cin, line)) run(line);
  }
  return 0;
}

struct SweepArgs {
  std::string corpus, lexicon, contractions, sizes = "2,3,4,5,6,7,8,9,10";
  int vocab_size = 20000, emb = 16, filters = 64, epochs = 8, batch = 64;
  float lr = 1e-3f;
  unsigned seed = 42;
};

int cmd_sweep_window(const SweepArgs& a) {
  auto lex = pos::TriggerLexicon::load(a.lexicon);
  auto contractions = load_table_or_empty(a.contractions);
  auto docs = data::read_lines(a.corpus);
  auto labeled =
      data::label_corpus(docs, lex, a.contractions.empty() ? nullptr : &contractions, 1);

  std::vector<int> sizes;
  std::istringstream ss(a.sizes);
  std::string part;
  while (std::getline(ss, part, ',')) sizes.push_back(std::stoi(part));

  boundary::BoundaryConfig base;
  base.vocab_size = a.vocab_size;
  base.emb_dim = a.emb;
  base.filters = a.filters;

  boundary::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch = a.batch;
  opt.adam.lr = a.lr;
  opt.seed = a.seed;
  opt.stop_at_accuracy = 2.0f;  // fixed budget: no early exit

  std::printf("window,offset,accuracy\n");
  for (const auto& pt : boundary::window_sweep(labeled, sizes, base, opt))
    std::printf("%d,%d,%.4f\n", pt.window, pt.offset, pt.accuracy);
  return 0;
}

int cmd_bench(const PipelineArgs& a, const std::string& texts_path, int iterations, int warmup) {
  auto pipe = make_pipeline(a);
  auto texts = data::read_lines(texts_path);
  auto r = pipeline::bench(pipe, texts, iterations, warmup);
  std::printf("stage,metric,value_ms\n");
  auto stage = [](const char* name, const pipeline::StageStats& s) {
    std::printf("%s,mean,%.6f\n", name, s.mean_ms);
    std::printf("%s,median,%.6f\n", name, s.median_ms);
    std::printf("%s,p99,%.6f\n", name, s.p99_ms);
  };
  stage("boundary", r.boundary);
  stage("emoji", r.emoji);
  stage("pipeline", r.full);
  std::printf("boundary_weights,file_bytes,%llu\n",
              static_cast<unsigned long long>(fs::file_size(a.boundary)));
  std::printf("emoji_weights,file_bytes,%llu\n",
              static_cast<unsigned long long>(fs::file_size(a.emoji)));
  return 0;
}

int cmd_quantize(const std::string& in, const std::string& out) {
  auto wf = nn::load_weights(in);
  nn::save_weights_quantized(out, wf.tensors);
  copy_sidecar(in + ".meta", out + ".meta");
  copy_sidecar(in + ".vocab", out + ".vocab");
  std::printf("input_bytes,%llu\n", static_cast<unsigned long long>(fs::file_size(in)));
  std::printf("output_bytes,%llu\n", static_cast<unsigned long long>(fs::file_size(out)));
  return 0;
}

struct ParamsArgs {
  std::string weights, arch = "aca";
  int vocab_size = 60000, classes = 64;
};

int cmd_params(const ParamsArgs& a) {
  if (!a.weights.empty()) {
    auto wf = nn::load_weights(a.weights);
    std::printf("%lld\n", static_cast<long long>(nn::param_count(wf.tensors)));
    return 0;
  }
  emoji::AcaConfig cfg;
  cfg.vocab_size = a.vocab_size;
  cfg.classes = a.classes;
  auto model = emoji::EmojiModel::build(emoji::emoji_arch_from_name(a.arch), cfg, 0);
  std::printf("%lld\n", static_cast<long long>(model.params().param_count()));
  return 0;
}

void add_pipeline_flags(CLI::App* cmd, PipelineArgs& a) {
  cmd->add_option("--boundary", a.boundary, "boundary weight file")->required();
  cmd->add_option("--emoji", a.emoji, "emoji weight file")->required();
  cmd->add_option("--labels", a.labels, "emoji label file")->required();
  cmd->add_option("--contractions", a.contractions, "contraction table");
  cmd->add_option("--shortforms", a.shortforms, "chat short-form table");
  cmd->add_option("--emoji-threshold", a.emoji_threshold, "min emoji probability");
  cmd->add_option("--boundary-threshold", a.boundary_threshold, "boundary decision threshold");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emoji insertion for transcribed text: boundary detection + per-subpart prediction"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "read options from a `key = value` file");
  unsigned seed = 42;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();

  BuildDataArgs bd;
  auto* c_bd = app.add_subcommand("build-data", "derive labels and compile windowed samples");
  c_bd->add_option("--corpus", bd.corpus, "one document per line")->required();
  c_bd->add_option("--out", bd.out, "output prefix (.samples/.vocab)")->required();
  c_bd->add_option("--lexicon", bd.lexicon, "trigger lexicon file")->required();
  c_bd->add_option("--contractions", bd.contractions, "contraction table");
  c_bd->add_option("--vocab-size", bd.vocab_size)->capture_default_str();
  c_bd->add_option("--window", bd.window)->capture_default_str();
  c_bd->add_option("--offset", bd.offset)->capture_default_str();
  c_bd->add_option("--threads", bd.threads)->capture_default_str();
  c_bd->add_flag("--multisentence-only", bd.multisentence_only,
                 "keep only documents with >= 2 subparts");

  TrainBoundaryArgs tb;
  auto* c_tb = app.add_subcommand("train-boundary", "train the boundary detector");
  c_tb->add_option("--data", tb.data, "prefix produced by build-data")->required();
  c_tb->add_option("--out", tb.out, "weight file to write")->required();
  c_tb->add_option("--arch", tb.arch, "cnn|bilstm")->capture_default_str();
  c_tb->add_option("--emb", tb.emb)->capture_default_str();
  c_tb->add_option("--filters", tb.filters)->capture_default_str();
  c_tb->add_option("--kernel", tb.kernel)->capture_default_str();
  c_tb->add_option("--dilation", tb.dilation)->capture_default_str();
  c_tb->add_option("--pool", tb.pool)->capture_default_str();
  c_tb->add_option("--bilstm-hidden", tb.bilstm_hidden)->capture_default_str();
  c_tb->add_option("--epochs", tb.epochs)->capture_default_str();
  c_tb->add_option("--batch", tb.batch)->capture_default_str();
  c_tb->add_option("--lr", tb.lr)->capture_default_str();
  c_tb->add_option("--threshold", tb.threshold)->capture_default_str();
  c_tb->add_option("--stop-at-accuracy", tb.stop_at)->capture_default_str();
  c_tb->add_option("--class-weight", tb.class_weight,
                   "fixed negative-class weight (instead of measured N/M)");
  c_tb->add_flag("--no-class-weight", tb.no_class_weight, "plain unweighted BCE");
  c_tb->add_flag("--verbose", tb.verbose);

  TrainEmojiArgs te;
  auto* c_te = app.add_subcommand("train-emoji", "train the emoji classifier");
  c_te->add_option("--data", te.data, "`label<TAB>text` training file")->required();
  c_te->add_option("--out", te.out, "weight file to write")->required();
  c_te->add_option("--arch", te.arch, "aca|bow|lstm_char|lstm_word")->capture_default_str();
  c_te->add_option("--vocab-size", te.vocab_size)->capture_default_str();
  c_te->add_option("--classes", te.classes)->capture_default_str();
  c_te->add_option("--word-emb", te.word_emb)->capture_default_str();
  c_te->add_option("--char-emb", te.char_emb)->capture_default_str();
  c_te->add_option("--lstm1", te.lstm1)->capture_default_str();
  c_te->add_option("--lstm2", te.lstm2)->capture_default_str();
  c_te->add_option("--attn-dim", te.attn_dim, "0 = concat dimension")->capture_default_str();
  c_te->add_option("--max-word-len", te.max_word_len)->capture_default_str();
  c_te->add_option("--epochs", te.epochs)->capture_default_str();
  c_te->add_option("--batch", te.batch)->capture_default_str();
  c_te->add_option("--lr", te.lr)->capture_default_str();
  c_te->add_option("--stop-at-accuracy", te.stop_at)->capture_default_str();
  c_te->add_flag("--verbose", te.verbose);

  EvalBoundaryArgs eb;
  auto* c_eb = app.add_subcommand("eval-boundary", "boundary metrics on a punctuated corpus");
  c_eb->add_option("--weights", eb.weights)->required();
  c_eb->add_option("--eval", eb.eval, "one document per line")->required();
  c_eb->add_option("--lexicon", eb.lexicon)->required();
  c_eb->add_option("--contractions", eb.contractions);
  c_eb->add_option("--vocab", eb.vocab, "defaults to <weights>.vocab");

  EvalEmojiArgs ee;
  auto* c_ee = app.add_subcommand("eval-emoji", "top-1/top-5/F1 on a labeled set");
  c_ee->add_option("--weights", ee.weights)->required();
  c_ee->add_option("--data", ee.data)->required();
  c_ee->add_option("--vocab", ee.vocab, "defaults to <weights>.vocab");

  PipelineArgs pa_eval;
  std::string gold_path;
  auto* c_ep = app.add_subcommand("eval-pipeline", "strict end-to-end accuracy on a gold file");
  add_pipeline_flags(c_ep, pa_eval);
  c_ep->add_option("--gold", gold_path, "`text<TAB>pos:emoji,...` file")->required();

  PipelineArgs pa_ann;
  std::string ann_text;
  auto* c_an = app.add_subcommand("annotate", "insert emoji into text (arg or stdin)");
  add_pipeline_flags(c_an, pa_ann);
  auto* ann_text_opt = c_an->add_option("--text", ann_text, "single input (stdin lines otherwise)");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep-window", "accuracy across window sizes");
  c_sw->add_option("--corpus", sw.corpus)->required();
  c_sw->add_option("--lexicon", sw.lexicon)->required();
  c_sw->add_option("--contractions", sw.contractions);
  c_sw->add_option("--sizes", sw.sizes, "comma-separated window sizes")->capture_default_str();
  c_sw->add_option("--vocab-size", sw.vocab_size)->capture_default_str();
  c_sw->add_option("--emb", sw.emb)->capture_default_str();
  c_sw->add_option("--filters", sw.filters)->capture_default_str();
  c_sw->add_option("--epochs", sw.epochs)->capture_default_str();
  c_sw->add_option("--batch", sw.batch)->capture_default_str();
  c_sw->add_option("--lr", sw.lr)->capture_default_str();

  PipelineArgs pa_bench;
  std::string bench_texts;
  int bench_iters = 1000, bench_warmup = 100;
  auto* c_be = app.add_subcommand("bench", "per-word latency and weight-file sizes");
  add_pipeline_flags(c_be, pa_bench);
  c_be->add_option("--texts", bench_texts, "one input per line")->required();
  c_be->add_option("--iterations", bench_iters)->capture_default_str();
  c_be->add_option("--warmup", bench_warmup)->capture_default_str();

  std::string q_in, q_out;
  auto* c_qu = app.add_subcommand("quantize", "rewrite a weight file with int8 tensors");
  c_qu->add_option("--weights", q_in)->required();
  c_qu->add_option("--out", q_out)->required();

  ParamsArgs pc;
  auto* c_pa = app.add_subcommand("params", "parameter count of weights or a configuration");
  c_pa->add_option("--weights", pc.weights, "count tensors in this file");
  c_pa->add_option("--arch", pc.arch, "emoji architecture when no weights given")
      ->capture_default_str();
  c_pa->add_option("--vocab-size", pc.vocab_size)->capture_default_str();
  c_pa->add_option("--classes", pc.classes)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    tb.seed = seed;
    te.seed = seed;
    sw.seed = seed;
    if (c_bd->parsed()) return cmd_build_data(bd);
    if (c_tb->parsed()) return cmd_train_boundary(tb);
    if (c_te->parsed()) return cmd_train_emoji(te);
    if (c_eb->parsed()) return cmd_eval_boundary(eb);
    if (c_ee->parsed()) return cmd_eval_emoji(ee);
    if (c_ep->parsed()) return cmd_eval_pipeline(pa_eval, gold_path);
    if (c_an->parsed())
      return cmd_annotate(pa_ann, ann_text_opt->count() > 0
                                      ? std::optional<std::string>(ann_text)
                                      : std::nullopt);
    if (c_sw->parsed()) return cmd_sweep_window(sw);
    if (c_be->parsed()) return cmd_bench(pa_bench, bench_texts, bench_iters, bench_warmup);
    if (c_qu->parsed()) return cmd_quantize(q_in, q_out);
    if (c_pa->parsed()) return cmd_params(pc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
