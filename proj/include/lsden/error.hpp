#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsden {

enum class Errc {
  invalid_argument,
  degenerate_input,
  out_of_range,
  file_not_found,
  unsupported_channels,
  unsupported_encoding,
  malformed_file,
  io_error,
  schema_error,
  version_mismatch,
  numerical_failure,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::degenerate_input: return "degenerate input";
    case Errc::out_of_range: return "value out of range";
    case Errc::file_not_found: return "file not found";
    case Errc::unsupported_channels: return "unsupported channel count";
    case Errc::unsupported_encoding: return "unsupported encoding";
    case Errc::malformed_file: return "malformed file";
    case Errc::io_error: return "i/o error";
    case Errc::schema_error: return "schema error";
    case Errc::version_mismatch: return "version mismatch";
    case Errc::numerical_failure: return "numerical failure";
  }
  return "unknown error";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can tell e.g. a stereo WAV from a truncated one.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace lsden
