#include "emojin/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace emojin::nn {

namespace {

constexpr char kMagic[4] = {'V', 'M', 'W', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("weight file truncated");
  return value;
}

void write_header(std::ostream& out, bool quantized, std::uint32_t count) {
  out.write(kMagic, 4);
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint8_t>(out, quantized ? 1 : 0);
  write_pod<std::uint32_t>(out, count);
}

void write_name_dims(std::ostream& out, const std::string& name, const std::vector<int>& shape) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (int d : shape) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d));
}

}  // namespace

QuantizedBlob quantize8(const Tensor& t) {
  QuantizedBlob blob;
  blob.shape = t.shape;
  float max_abs = 0.0f;
  for (float v : t.data) max_abs = std::max(max_abs, std::abs(v));
  blob.scale = max_abs > 0.0f ? max_abs / 127.0f : 1.0f;  // degenerate range rule
  blob.zero_point = 0;
  blob.payload.resize(t.data.size());
  for (size_t i = 0; i < t.data.size(); ++i) {
    float q = std::round(t.data[i] / blob.scale);
    q = std::min(127.0f, std::max(-127.0f, q));
    blob.payload[i] = static_cast<std::int8_t>(q);
  }
  return blob;
}

Tensor dequantize8(const QuantizedBlob& blob) {
  Tensor t = Tensor::zeros(blob.shape);
  for (size_t i = 0; i < blob.payload.size(); ++i)
    t.data[i] = (static_cast<float>(blob.payload[i]) - blob.zero_point) * blob.scale;
  return t;
}

std::map<std::string, QuantizedBlob> quantize8(const std::map<std::string, Tensor>& tensors) {
  std::map<std::string, QuantizedBlob> out;
  for (const auto& [name, t] : tensors) out[name] = quantize8(t);
  return out;
}

std::map<std::string, Tensor> dequantize8(const std::map<std::string, QuantizedBlob>& blobs) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, b] : blobs) out[name] = dequantize8(b);
  return out;
}

void save_weights(const std::filesystem::path& path, const std::map<std::string, Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open weight file for writing: " + path.string());
  write_header(out, false, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_name_dims(out, name, t.shape);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write to weight file: " + path.string());
}

void save_weights_quantized(const std::filesystem::path& path,
                            const std::map<std::string, Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open weight file for writing: " + path.string());
  write_header(out, true, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    QuantizedBlob blob = quantize8(t);
    write_name_dims(out, name, blob.shape);
    out.write(reinterpret_cast<const char*>(blob.payload.data()),
              static_cast<std::streamsize>(blob.payload.size()));
    write_pod<float>(out, blob.scale);
    write_pod<std::int8_t>(out, blob.zero_point);
  }
  if (!out) throw std::runtime_error("short write to weight file: " + path.string());
}

WeightFile load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a weight file: " + path.string());
  auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported weight file version");
  bool quantized = read_pod<std::uint8_t>(in) != 0;
  auto count = read_pod<std::uint32_t>(in);

  WeightFile file;
  file.quantized = quantized;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    auto rank = read_pod<std::uint32_t>(in);
    std::vector<int> shape(rank);
    std::int64_t n = 1;
    for (auto& d : shape) {
      d = static_cast<int>(read_pod<std::uint32_t>(in));
      n *= d;
    }
    if (quantized) {
      QuantizedBlob blob;
      blob.shape = shape;
      blob.payload.resize(static_cast<size_t>(n));
      in.read(reinterpret_cast<char*>(blob.payload.data()), n);
      blob.scale = read_pod<float>(in);
      blob.zero_point = read_pod<std::int8_t>(in);
      if (!in) throw std::runtime_error("weight file truncated");
      file.tensors[name] = dequantize8(blob);
    } else {
      Tensor t = Tensor::zeros(shape);
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(n * sizeof(float)));
      if (!in) throw std::runtime_error("weight file truncated");
      file.tensors[name] = std::move(t);
    }
  }
  return file;
}

void load_pretrained_embeddings(const std::filesystem::path& path,
                                const std::vector<std::string>& id_to_word, Tensor& table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path.string());
  std::unordered_map<std::string, int> word_to_id;
  for (size_t i = 0; i < id_to_word.size(); ++i) word_to_id[id_to_word[i]] = static_cast<int>(i);
  int dim = table.shape[1];
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    auto it = word_to_id.find(word);
    if (it == word_to_id.end()) continue;
    for (int j = 0; j < dim; ++j) {
      float v;
      if (!(ss >> v)) throw std::runtime_error("embedding row too short for: " + word);
      table.at(it->second, j) = v;
    }
  }
}

}  // namespace emojin::nn
