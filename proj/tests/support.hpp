#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

// Unique per-process scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = fs::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      fs::path p = base / ("emojin_test_" + std::to_string(rd()));
      std::error_code ec;
      if (fs::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw std::runtime_error("could not create temp directory");
  }
  ~TempDir() {
    if (path_.empty()) return;
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) { other.path_.clear(); }
  TempDir& operator=(TempDir&& other) noexcept {
    if (this != &other) {
      this->~TempDir();
      path_ = std::move(other.path_);
      other.path_.clear();
    }
    return *this;
  }

  const fs::path& path() const { return path_; }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline fs::path data_dir() {
#ifdef EMOJIN_DATA_DIR
  return fs::path(EMOJIN_DATA_DIR);
#else
  return fs::path("data");
#endif
}

}  // namespace testsupport
