#include "emojin/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

namespace emojin::data {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v & 0xffffffffu));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("samples cache: truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t lo = read_u32(is);
  std::uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

}  // namespace

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write vocab: " + path.string());
  for (const auto& w : id_to_word_) os << w << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read vocab: " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.word_to_id_[line] = static_cast<int>(v.id_to_word_.size());
    v.id_to_word_.push_back(line);
  }
  if (v.id_to_word_.size() < 2 || v.id_to_word_[0] != "<pad>" || v.id_to_word_[1] != "<unk>")
    throw std::runtime_error("vocab file missing <pad>/<unk> header: " + path.string());
  return v;
}

Vocabulary VocabBuilder::finish(int max_size) const {
  if (counts_.empty()) throw EmptyCorpus("no tokens seen while building vocabulary");
  if (max_size < 3)
    throw std::invalid_argument("vocabulary size must leave room beyond <pad>/<unk>, got " +
                                std::to_string(max_size));
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts_.begin(), counts_.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.id_to_word_ = {"<pad>", "<unk>"};
  for (const auto& [word, freq] : ranked) {
    if (static_cast<int>(v.id_to_word_.size()) >= max_size) break;
    v.id_to_word_.push_back(word);
  }
  for (size_t i = 0; i < v.id_to_word_.size(); ++i) v.word_to_id_[v.id_to_word_[i]] = static_cast<int>(i);
  return v;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus_tokens, int max_size) {
  VocabBuilder b;
  for (const auto& w : corpus_tokens) b.add(w);
  return b.finish(max_size);
}

LabeledTokenSeq derive_labels(const std::string& raw_article, const pos::TriggerLexicon& lex,
                              const text::ExpansionTable* contractions) {
  static const text::ExpansionTable kNoContractions;
  text::TokenSeq toks = text::tokenize(raw_article);
  text::TokenSeq norm = text::normalize(toks, contractions ? *contractions : kNoContractions);
  LabeledTokenSeq out;
  out.tokens = norm;
  out.boundary_after.assign(norm.tokens.size(), false);
  auto tags = pos::tag(norm, lex);
  for (size_t i = 0; i < norm.tokens.size(); ++i) {
    if (norm.tokens[i].sentence_final) out.boundary_after[i] = true;
    if (i + 1 < norm.tokens.size() && tags[i + 1] != pos::TriggerTag::NONE) out.boundary_after[i] = true;
  }
  return out;
}

std::vector<std::uint32_t> window_at(const std::vector<int>& ids, int i, int window, int offset) {
  std::vector<std::uint32_t> w(static_cast<size_t>(window), Vocabulary::kPad);
  int lo = i - (offset - 1);
  for (int k = 0; k < window; ++k) {
    int src = lo + k;
    if (src >= 0 && src < static_cast<int>(ids.size())) w[static_cast<size_t>(k)] = static_cast<std::uint32_t>(ids[static_cast<size_t>(src)]);
  }
  return w;
}

std::vector<Sample> make_windows(const LabeledTokenSeq& seq, const Vocabulary& vocab, int window,
                                 int offset) {
  if (window < 2) throw InvalidWindowConfig("window must be >= 2, got " + std::to_string(window));
  if (offset < 1 || offset > window)
    throw InvalidWindowConfig("offset must lie in [1, window], got " + std::to_string(offset));
  std::vector<int> ids;
  ids.reserve(seq.tokens.tokens.size());
  for (const auto& t : seq.tokens.tokens) ids.push_back(vocab.id(t.surface));
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    Sample s;
    s.window = window_at(ids, i, window, offset);
    s.label = seq.boundary_after[static_cast<size_t>(i)];
    out.push_back(std::move(s));
  }
  return out;
}

ClassStats class_stats(const std::vector<Sample>& samples) {
  ClassStats st;
  for (const auto& s : samples) (s.label ? st.boundary : st.no_boundary)++;
  return st;
}

int count_subparts(const LabeledTokenSeq& seq) {
  if (seq.tokens.tokens.empty()) return 0;
  int parts = 1;
  for (size_t i = 0; i + 1 < seq.boundary_after.size(); ++i)
    if (seq.boundary_after[i]) ++parts;
  return parts;
}

std::vector<LabeledTokenSeq> extract_multisentence(const std::vector<std::string>& dialogs,
                                                   const pos::TriggerLexicon& lex,
                                                   const text::ExpansionTable* contractions) {
  std::vector<LabeledTokenSeq> out;
  for (const auto& d : dialogs) {
    LabeledTokenSeq seq = derive_labels(d, lex, contractions);
    if (count_subparts(seq) >= 2) out.push_back(std::move(seq));
  }
  return out;
}

std::vector<LabeledTokenSeq> label_corpus(const std::vector<std::string>& documents,
                                          const pos::TriggerLexicon& lex,
                                          const text::ExpansionTable* contractions, int threads) {
  std::vector<LabeledTokenSeq> out(documents.size());
  if (threads <= 1 || documents.size() < 2) {
    for (size_t i = 0; i < documents.size(); ++i) out[i] = derive_labels(documents[i], lex, contractions);
    return out;
  }
  int n = std::min<int>(threads, static_cast<int>(documents.size()));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    pool.emplace_back([&, t]() {
      for (size_t i = static_cast<size_t>(t); i < documents.size(); i += static_cast<size_t>(n))
        out[i] = derive_labels(documents[i], lex, contractions);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

static constexpr char kSamplesMagic[4] = {'V', 'M', 'D', 'S'};
static constexpr std::uint32_t kSamplesVersion = 1;

void save_samples(const std::filesystem::path& path, const SampleCache& cache) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write samples cache: " + path.string());
  os.write(kSamplesMagic, 4);
  write_u32(os, kSamplesVersion);
  write_u32(os, static_cast<std::uint32_t>(cache.window));
  write_u32(os, static_cast<std::uint32_t>(cache.offset));
  write_u64(os, cache.samples.size());
  for (const auto& s : cache.samples) {
    if (static_cast<int>(s.window.size()) != cache.window)
      throw std::runtime_error("samples cache: sample width disagrees with header");
    for (std::uint32_t id : s.window) write_u32(os, id);
    unsigned char lab = s.label ? 1 : 0;
    os.write(reinterpret_cast<const char*>(&lab), 1);
  }
}

SampleCache load_samples(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read samples cache: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kSamplesMagic, 4))
    throw std::runtime_error("samples cache: bad magic");
  std::uint32_t version = read_u32(is);
  if (version != kSamplesVersion)
    throw std::runtime_error("samples cache: unsupported version " + std::to_string(version));
  SampleCache cache;
  cache.window = static_cast<int>(read_u32(is));
  cache.offset = static_cast<int>(read_u32(is));
  std::uint64_t count = read_u64(is);
  cache.samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.window.resize(static_cast<size_t>(cache.window));
    for (auto& id : s.window) id = read_u32(is);
    unsigned char lab = 0;
    is.read(reinterpret_cast<char*>(&lab), 1);
    if (!is) throw std::runtime_error("samples cache: truncated");
    s.label = lab != 0;
    cache.samples.push_back(std::move(s));
  }
  return cache;
}

}  // namespace emojin::data
