#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rangebreak/errors.hpp"

namespace rangebreak {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes via a sibling temp file plus rename, so readers never observe a
// partially written file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail(Errc::io_error, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::io_error, "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

}  // namespace rangebreak
