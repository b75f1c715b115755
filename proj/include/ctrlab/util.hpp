#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace ctrlab {

// Bad configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pipeline stage failed (CLI exit code 2).
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_name(stage) {}
  std::string stage_name;
};

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad number: '" + std::string(s) + "'");
  return v;
}

inline int64_t parse_int(std::string_view s) {
  int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace ctrlab
