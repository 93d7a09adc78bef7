#include "emojin/kvfile.hpp"

#include <fstream>
#include <stdexcept>

namespace emojin::util {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

std::map<std::string, std::string> read_kv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed line in " + path.string() + ": " + line);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

void write_kv(const std::filesystem::path& path, const std::map<std::string, std::string>& kv) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write: " + path.string());
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
}

}  // namespace emojin::util
