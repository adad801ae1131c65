#include "chdqn/config_file.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "chdqn/errors.hpp"

namespace chdqn {
namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::string& origin) : text_(text), origin_(origin) {}

  std::map<std::string, ConfigValue> run() {
    std::map<std::string, ConfigValue> entries;
    std::string table;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        table = key();
        skip_spaces();
        expect(']');
        end_of_line();
        continue;
      }
      std::string name = key();
      skip_spaces();
      expect('=');
      skip_spaces();
      ConfigValue v = value();
      end_of_line();
      std::string full = table.empty() ? name : table + "." + name;
      if (!entries.emplace(full, std::move(v)).second) fail("duplicate key '" + full + "'");
    }
    return entries;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) line += text_[i] == '\n';
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_spaces() {
    while (peek() == ' ' || peek() == '\t') ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_insignificant() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (!at_end() && peek() != '\n') fail("unexpected trailing characters");
    if (!at_end()) ++pos_;
  }

  static bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }

  std::string key() {
    if (peek() == '"') return quoted();
    const std::size_t start = pos_;
    while (bare_key_char(peek())) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string quoted() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  ConfigValue value() {
    const char c = peek();
    if (c == '"') return {quoted()};
    if (c == '[') return {array()};
    const std::size_t start = pos_;
    while (!at_end() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' &&
           peek() != '\r' && peek() != ' ' && peek() != '\t') {
      ++pos_;
    }
    std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a value");
    if (token == "true") return {true};
    if (token == "false") return {false};
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    if (!digits.empty() && digits[0] == '+') digits.erase(0, 1);
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    const bool looks_float = digits.find_first_of(".eEn") != std::string::npos;
    if (!looks_float) {
      std::int64_t i = 0;
      auto [end, ec] = std::from_chars(first, last, i);
      if (ec == std::errc{} && end == last) return {i};
    }
    double d = 0.0;
    auto [end, ec] = std::from_chars(first, last, d);
    if (ec == std::errc{} && end == last) return {d};
    fail("cannot parse value '" + token + "'");
  }

  ConfigArray array() {
    expect('[');
    ConfigArray items;
    skip_insignificant();
    while (peek() != ']') {
      items.push_back(value());
      skip_insignificant();
      if (peek() == ',') {
        ++pos_;
        skip_insignificant();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    ++pos_;
    return items;
  }

  std::string_view text_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

std::string type_error(const std::string& origin, const std::string& key, const char* wanted) {
  return origin + ": key '" + key + "' must be " + wanted;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, const std::string& origin) {
  ConfigFile file;
  file.origin_ = origin;
  file.entries_ = Parser(text, origin).run();
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::vector<std::string> ConfigFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

const ConfigValue* ConfigFile::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<bool> ConfigFile::boolean(const std::string& key) const {
  const ConfigValue* v = find(key);
  if (!v) return std::nullopt;
  if (const auto* b = std::get_if<bool>(&v->data)) return *b;
  throw ConfigError(type_error(origin_, key, "a boolean"));
}

std::optional<std::int64_t> ConfigFile::integer(const std::string& key) const {
  const ConfigValue* v = find(key);
  if (!v) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(&v->data)) return *i;
  throw ConfigError(type_error(origin_, key, "an integer"));
}

std::optional<double> ConfigFile::number(const std::string& key) const {
  const ConfigValue* v = find(key);
  if (!v) return std::nullopt;
  if (const auto* d = std::get_if<double>(&v->data)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v->data)) return static_cast<double>(*i);
  throw ConfigError(type_error(origin_, key, "a number"));
}

std::optional<std::string> ConfigFile::string(const std::string& key) const {
  const ConfigValue* v = find(key);
  if (!v) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&v->data)) return *s;
  throw ConfigError(type_error(origin_, key, "a string"));
}

std::optional<std::vector<std::int64_t>> ConfigFile::integer_list(const std::string& key) const {
  const ConfigValue* v = find(key);
  if (!v) return std::nullopt;
  const auto* arr = std::get_if<ConfigArray>(&v->data);
  if (!arr) throw ConfigError(type_error(origin_, key, "an array of integers"));
  std::vector<std::int64_t> out;
  for (const auto& item : *arr) {
    const auto* i = std::get_if<std::int64_t>(&item.data);
    if (!i) throw ConfigError(type_error(origin_, key, "an array of integers"));
    out.push_back(*i);
  }
  return out;
}

std::optional<std::vector<std::string>> ConfigFile::string_list(const std::string& key) const {
  const ConfigValue* v = find(key);
  if (!v) return std::nullopt;
  const auto* arr = std::get_if<ConfigArray>(&v->data);
  if (!arr) throw ConfigError(type_error(origin_, key, "an array of strings"));
  std::vector<std::string> out;
  for (const auto& item : *arr) {
    const auto* s = std::get_if<std::string>(&item.data);
    if (!s) throw ConfigError(type_error(origin_, key, "an array of strings"));
    out.push_back(*s);
  }
  return out;
}

}  // namespace chdqn
