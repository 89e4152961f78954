#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "lsden/error.hpp"

namespace lsden {

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a truncated file at `path`.
inline void atomic_write(const std::filesystem::path& path, std::ios::openmode mode,
                         const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, mode | std::ios::trunc);
    require(static_cast<bool>(out), Errc::io_error, "cannot open " + tmp.string() + " for writing");
    try {
      body(out);
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::io_error, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::io_error, "cannot rename into " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  require(std::filesystem::exists(path), Errc::file_not_found, path.string());
  std::ifstream in(path, mode | std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace lsden
