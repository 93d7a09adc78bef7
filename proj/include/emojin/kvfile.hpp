#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace emojin::util {

// Line-oriented `key = value` files, used for model metadata sidecars.
// `#` starts a comment; whitespace around keys and values is trimmed.
std::map<std::string, std::string> read_kv(const std::filesystem::path& path);
void write_kv(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);

}  // namespace emojin::util
