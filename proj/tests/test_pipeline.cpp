#include <algorithm>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "emojin/pipeline.hpp"
#include "support.hpp"

using namespace emojin;
using pos::TriggerTag;

namespace {

pos::TriggerLexicon join_lexicon() {
  return pos::TriggerLexicon::from_entries({
      {"and", {TriggerTag::CC}},
      {"but", {TriggerTag::CC}},
      {"because", {TriggerTag::IN}},
      {"while", {TriggerTag::IN}},
  });
}

emoji::EmojiLabelSet three_labels() {
  return emoji::EmojiLabelSet::from_entries({
      {"🎂", "celebration", "birthday cake"},
      {"🌧", "weather", "cloud with rain"},
      {"🏢", "work", "office building"},
  });
}

// Keyword clauses per label so both models are trainable to saturation.
const std::vector<std::vector<std::string>>& family_clauses() {
  static const std::vector<std::vector<std::string>> fams = {
      {"the cake looked great", "we shared sweet cake", "the party was fun",
       "a gift came today"},
      {"rain fell all night", "the storm came fast", "dark clouds rolled in",
       "heavy rain soaked us"},
      {"i walked to work", "the office was busy", "the meeting ran long",
       "my desk was clean"},
  };
  return fams;
}

struct Fixture {
  testsupport::TempDir tmp;
  data::Vocabulary bvocab, evocab;
  boundary::BoundaryModel bmodel;
  emoji::EmojiModel emodel;
  std::filesystem::path bpath, epath;
};

Fixture make_fixture() {
  Fixture f;
  auto lex = join_lexicon();
  const std::vector<std::string> joins = {"because", "and", "but", "while"};

  std::vector<std::string> clauses;
  for (const auto& fam : family_clauses())
    clauses.insert(clauses.end(), fam.begin(), fam.end());

  std::vector<std::string> docs;
  for (size_t i = 0; i < clauses.size(); ++i)
    for (size_t j = 0; j < joins.size(); ++j)
      docs.push_back(clauses[i] + " " + joins[j] + " " + clauses[(i + j + 1) % clauses.size()] +
                     ".");
  for (const auto& c : clauses) docs.push_back(c + ".");

  auto labeled = data::label_corpus(docs, lex);
  data::VocabBuilder bvb;
  for (const auto& seq : labeled) bvb.add_all(seq.tokens);
  f.bvocab = bvb.finish(200);
  std::vector<data::Sample> samples;
  for (const auto& seq : labeled) {
    auto s = data::make_windows(seq, f.bvocab, 6, 4);
    samples.insert(samples.end(), s.begin(), s.end());
  }

  boundary::BoundaryConfig bcfg;
  bcfg.vocab_size = 200;
  bcfg.emb_dim = 8;
  bcfg.filters = 32;
  f.bmodel = boundary::BoundaryModel::build(bcfg, 7);
  boundary::TrainOptions bopt;
  bopt.epochs = 80;
  bopt.stop_at_accuracy = 1.0f;
  f.bmodel.train(samples, data::class_stats(samples), bopt);

  std::vector<emoji::EmojiSample> esamples;
  data::VocabBuilder evb;
  for (int label = 0; label < 3; ++label)
    for (const auto& clause : family_clauses()[static_cast<size_t>(label)]) {
      auto words = text::tokenize(clause).words();
      emoji::EmojiSample plain{words, label};
      esamples.push_back(plain);
      for (const auto& j : joins) {
        auto prefixed = words;
        prefixed.insert(prefixed.begin(), j);
        esamples.push_back({prefixed, label});
      }
    }
  for (const auto& s : esamples)
    for (const auto& w : s.words) evb.add(w);
  f.evocab = evb.finish(200);

  emoji::AcaConfig ecfg;
  ecfg.vocab_size = 200;
  ecfg.word_emb = 8;
  ecfg.char_emb = 4;
  ecfg.char_kernels = {{2, 4}, {3, 4}};
  ecfg.lstm1 = 8;
  ecfg.lstm2 = 8;
  ecfg.classes = 3;
  ecfg.max_word_len = 12;
  f.emodel = emoji::EmojiModel::build(emoji::EmojiArch::ACA, ecfg, 11);
  emoji::EmojiTrainOptions eopt;
  eopt.epochs = 60;
  eopt.stop_at_accuracy = 1.0f;
  f.emodel.train(esamples, f.evocab, eopt);

  f.bpath = f.tmp.file("boundary.vmw");
  f.epath = f.tmp.file("emoji.vmw");
  f.bmodel.save(f.bpath);
  f.bvocab.save(f.bpath.string() + ".vocab");
  f.emodel.save(f.epath);
  f.evocab.save(f.epath.string() + ".vocab");
  return f;
}

Fixture& fx() {
  static Fixture f = make_fixture();
  return f;
}

pipeline::Pipeline live_pipeline(pipeline::PipelineConfig cfg = {}) {
  auto& f = fx();
  return pipeline::Pipeline(f.bmodel, f.bvocab, f.emodel, f.evocab, three_labels(), cfg);
}

int word_count(const std::string& text) {
  return static_cast<int>(text::tokenize(text).size());
}

}  // namespace

TEST_CASE("render interleaves glyphs and preserves the words") {
  pipeline::AnnotatedText a;
  a.words = {"we", "won", "today"};
  a.insertions.push_back({1, 0, "🎂", 0.9f});
  a.insertions.push_back({2, 1, "🌧", 0.8f});
  CHECK(pipeline::render(a) == "we won 🎂 today 🌧");

  // dropping the glyph tokens recovers the words
  std::istringstream is(pipeline::render(a));
  std::vector<std::string> kept;
  std::string tok;
  while (is >> tok)
    if (tok != "🎂" && tok != "🌧") kept.push_back(tok);
  CHECK(kept == a.words);

  pipeline::AnnotatedText bare;
  bare.words = {"hello"};
  CHECK(pipeline::render(bare) == "hello");
}

TEST_CASE("gold files parse positions and tolerate missing annotations") {
  testsupport::TempDir tmp;
  testsupport::write_file(tmp.file("gold.tsv"),
                          "# fixture\n"
                          "we won the game\t3:🎂\n"
                          "nothing here\n"
                          "two cuts flow\t0:🌧,2:🏢\n"
                          "empty column\t\n");
  auto gold = pipeline::load_gold(tmp.file("gold.tsv"));
  REQUIRE(gold.size() == 4);
  CHECK(gold[0].text == "we won the game");
  REQUIRE(gold[0].insertions.size() == 1);
  CHECK(gold[0].insertions[0] == std::pair<int, std::string>{3, "🎂"});
  CHECK(gold[1].insertions.empty());
  REQUIRE(gold[2].insertions.size() == 2);
  CHECK(gold[2].insertions[1] == std::pair<int, std::string>{2, "🏢"});
  CHECK(gold[3].insertions.empty());

  testsupport::write_file(tmp.file("bad.tsv"), "text\t3\n");
  CHECK_THROWS(pipeline::load_gold(tmp.file("bad.tsv")));
  CHECK_THROWS(pipeline::load_gold(tmp.file("absent.tsv")));
}

TEST_CASE("strict accuracy requires exact positions and matching categories") {
  auto labels = emoji::EmojiLabelSet::from_entries({
      {"🎂", "celebration", "cake"},
      {"🎉", "celebration", "popper"},
      {"🌧", "weather", "rain"},
  });

  auto pred = [](std::vector<std::pair<int, std::string>> ins) {
    pipeline::AnnotatedText a;
    for (auto& [pos, glyph] : ins) a.insertions.push_back({pos, 0, glyph, 1.0f});
    return a;
  };
  auto want = [](std::vector<std::pair<int, std::string>> ins) {
    pipeline::GoldMessage g;
    g.insertions = std::move(ins);
    return g;
  };

  // same category at the same position counts even with a different glyph
  CHECK(pipeline::overall_accuracy({pred({{2, "🎉"}})}, {want({{2, "🎂"}})}, labels) == 100.0);
  // wrong category
  CHECK(pipeline::overall_accuracy({pred({{2, "🌧"}})}, {want({{2, "🎂"}})}, labels) == 0.0);
  // right category, wrong position
  CHECK(pipeline::overall_accuracy({pred({{1, "🎂"}})}, {want({{2, "🎂"}})}, labels) == 0.0);
  // extra prediction fails the message
  CHECK(pipeline::overall_accuracy({pred({{2, "🎂"}, {4, "🎂"}})}, {want({{2, "🎂"}})}, labels) ==
        0.0);
  // both empty is a match
  CHECK(pipeline::overall_accuracy({pred({})}, {want({})}, labels) == 100.0);
  // averaged over messages
  CHECK(pipeline::overall_accuracy({pred({{2, "🎂"}}), pred({})},
                                   {want({{2, "🎂"}}), want({{0, "🌧"}})}, labels) == 50.0);

  CHECK_THROWS_AS(pipeline::overall_accuracy({}, {}, labels), std::invalid_argument);
  CHECK_THROWS_AS(pipeline::overall_accuracy({pred({})}, {}, labels), std::invalid_argument);
  CHECK_THROWS(pipeline::overall_accuracy({pred({{2, "🦖"}})}, {want({{2, "🦖"}})}, labels));
}

TEST_CASE("an unloaded pipeline refuses to annotate") {
  pipeline::Pipeline p;
  CHECK_FALSE(p.loaded());
  CHECK_THROWS_AS(p.annotate("hello there"), pipeline::ModelNotLoaded);
}

TEST_CASE("preprocess expands short forms before contractions") {
  auto& f = fx();
  auto shortforms = text::ExpansionTable::from_entries({{"idk", {"i", "don't", "know"}}});
  auto contractions = text::ExpansionTable::from_entries({{"don't", {"do", "not"}}});
  pipeline::Pipeline p(f.bmodel, f.bvocab, f.emodel, f.evocab, three_labels(), {}, contractions,
                       shortforms);
  auto seq = p.preprocess("IDK anymore");
  CHECK(seq.words() == std::vector<std::string>{"i", "do", "not", "know", "anymore"});
}

TEST_CASE("annotation places trained emoji at subpart ends") {
  auto p = live_pipeline();
  auto a = p.annotate("the cake looked great because rain fell all night");
  CHECK(a.words == std::vector<std::string>{"the", "cake", "looked", "great", "because", "rain",
                                            "fell", "all", "night"});
  REQUIRE(a.insertions.size() == 2);
  CHECK(a.insertions[0].after_token == 3);
  CHECK(a.insertions[0].glyph == "🎂");
  CHECK(a.insertions[1].after_token == 8);
  CHECK(a.insertions[1].glyph == "🌧");
  for (const auto& ins : a.insertions) CHECK(ins.probability >= p.config().emoji_threshold);
  CHECK(pipeline::render(a) == "the cake looked great 🎂 because rain fell all night 🌧");
}

TEST_CASE("empty input annotates to nothing") {
  auto p = live_pipeline();
  auto a = p.annotate("...");
  CHECK(a.words.empty());
  CHECK(a.insertions.empty());
  CHECK(pipeline::render(a).empty());
}

TEST_CASE("the emoji threshold gates insertions") {
  const std::string msg = "i walked to work but the storm came fast";
  pipeline::PipelineConfig cfg;

  cfg.emoji_threshold = 1.01f;  // probabilities cannot clear it
  CHECK(live_pipeline(cfg).annotate(msg).insertions.empty());

  cfg.emoji_threshold = 0.0f;  // every subpart gets one
  auto a = live_pipeline(cfg).annotate(msg);
  auto& f = fx();
  auto bounds = f.bmodel.predict_boundaries(live_pipeline(cfg).preprocess(msg), f.bvocab);
  int last = word_count(msg) - 1;
  REQUIRE_FALSE(a.insertions.empty());
  CHECK(a.insertions.back().after_token == last);
  for (size_t i = 0; i < a.insertions.size(); ++i) {
    int pos = a.insertions[i].after_token;
    if (i) CHECK(pos > a.insertions[i - 1].after_token);
    CHECK((pos == last || bounds.contains(pos)));
  }
  auto cuts = std::count_if(bounds.positions.begin(), bounds.positions.end(),
                            [&](int p) { return p < last; });
  CHECK(static_cast<std::ptrdiff_t>(a.insertions.size()) == 1 + cuts);
}

TEST_CASE("a boundary threshold override reshapes the subparts") {
  const std::string msg = "we shared sweet cake while dark clouds rolled in";
  int n = word_count(msg);

  pipeline::PipelineConfig cfg;
  cfg.emoji_threshold = 0.0f;
  cfg.boundary_threshold = 1.01f;  // no cut clears it: one subpart
  auto one = live_pipeline(cfg).annotate(msg);
  REQUIRE(one.insertions.size() == 1);
  CHECK(one.insertions[0].after_token == n - 1);

  cfg.boundary_threshold = 0.0f;  // every position cuts
  auto all = live_pipeline(cfg).annotate(msg);
  CHECK(static_cast<int>(all.insertions.size()) == n);
}

TEST_CASE("pipelines reload from saved weights and sidecars") {
  auto& f = fx();
  auto live = live_pipeline();
  auto loaded = pipeline::Pipeline::load(f.bpath, f.epath,
                                         testsupport::data_dir() / "emoji_labels.tsv");
  CHECK(loaded.loaded());
  CHECK(loaded.labels().size() == emoji::EmojiLabelSet::kLabelCount);

  for (const std::string msg :
       {"the party was fun because heavy rain soaked us", "the meeting ran long",
        "a gift came today and my desk was clean"}) {
    auto a = live.annotate(msg);
    auto b = loaded.annotate(msg);
    CHECK(pipeline::render(a) == pipeline::render(b));
  }
}

TEST_CASE("missing sidecars fail the load") {
  auto& f = fx();
  testsupport::TempDir tmp;
  auto orphan = tmp.file("orphan.vmw");
  std::filesystem::copy_file(f.bpath, orphan);
  std::filesystem::copy_file(f.bpath.string() + ".meta", orphan.string() + ".meta");
  // no .vocab sidecar
  CHECK_THROWS(pipeline::Pipeline::load(orphan, f.epath,
                                        testsupport::data_dir() / "emoji_labels.tsv"));
}

TEST_CASE("bench reports positive per-word stage times") {
  auto p = live_pipeline();
  auto report = pipeline::bench(
      p, {"the cake looked great because rain fell all night", "i walked to work"}, 4, 1);
  for (const auto* s : {&report.boundary, &report.emoji, &report.full}) {
    CHECK(s->mean_ms > 0.0);
    CHECK(s->median_ms > 0.0);
    CHECK(s->p99_ms >= s->median_ms);
  }
  CHECK(report.full.mean_ms < 5000.0);
  CHECK_THROWS_AS(pipeline::bench(p, {}, 1, 0), std::invalid_argument);
}
