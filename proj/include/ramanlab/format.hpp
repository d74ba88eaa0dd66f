#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace ramanlab
{

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v)
{
  if (v == 0.0)
    v = 0.0;  // drop the sign of -0
  char buf[64];
  auto const res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

// Strict parse: the whole view must be a finite number.
inline std::optional<double> parse_double(std::string_view text)
{
  if (text.empty())
    return std::nullopt;
  if (text.front() == '+')
    text.remove_prefix(1);
  double v = 0.0;
  auto const res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(std::string_view text)
{
  long long v = 0;
  auto const res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
    return std::nullopt;
  return v;
}

}  // namespace ramanlab
