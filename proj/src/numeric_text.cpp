#include "chdqn/numeric_text.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "chdqn/errors.hpp"

namespace chdqn {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buffer{};
  auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc{}) throw DataError("could not format double");
  return std::string(buffer.data(), end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace chdqn
