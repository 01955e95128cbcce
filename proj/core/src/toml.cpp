#include "beambind/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "beambind/errors.hpp"

namespace bb::toml {
namespace {

using nlohmann::json;

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char get() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("toml parse error at line " + std::to_string(line) + ": " + msg);
  }

  // Whitespace and comments. Newlines are consumed only when `newlines` is set
  // (inside arrays); at statement level they terminate the line.
  void skip_ws(bool newlines) {
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        get();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') get();
      } else if (c == '\n' && newlines) {
        get();
      } else {
        break;
      }
    }
  }

  void expect_eol() {
    skip_ws(false);
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    get();
  }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_basic_string(Cursor& cur) {
  cur.get();  // opening quote
  std::string out;
  while (true) {
    if (cur.eof()) cur.fail("unterminated string");
    char c = cur.get();
    if (c == '"') break;
    if (c == '\n') cur.fail("newline in basic string");
    if (c == '\\') {
      if (cur.eof()) cur.fail("unterminated escape");
      char e = cur.get();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: cur.fail(std::string("unsupported escape \\") + e);
      }
    } else {
      out += c;
    }
  }
  return out;
}

std::string parse_key(Cursor& cur) {
  if (!cur.eof() && cur.peek() == '"') return parse_basic_string(cur);
  std::string out;
  while (!cur.eof() && is_bare_key_char(cur.peek())) out += cur.get();
  if (out.empty()) cur.fail("expected key");
  return out;
}

json parse_value(Cursor& cur);

json parse_array(Cursor& cur) {
  cur.get();  // '['
  json arr = json::array();
  cur.skip_ws(true);
  if (!cur.eof() && cur.peek() == ']') {
    cur.get();
    return arr;
  }
  while (true) {
    cur.skip_ws(true);
    arr.push_back(parse_value(cur));
    cur.skip_ws(true);
    if (cur.eof()) cur.fail("unterminated array");
    char c = cur.get();
    if (c == ']') break;
    if (c != ',') cur.fail("expected ',' or ']' in array");
    cur.skip_ws(true);
    if (!cur.eof() && cur.peek() == ']') {  // trailing comma
      cur.get();
      break;
    }
  }
  return arr;
}

json parse_number_or_bool(Cursor& cur) {
  std::string tok;
  while (!cur.eof()) {
    char c = cur.peek();
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
        c == '_') {
      tok += cur.get();
    } else {
      break;
    }
  }
  if (tok.empty()) cur.fail("expected value");
  if (tok == "true") return json(true);
  if (tok == "false") return json(false);

  std::string digits;
  digits.reserve(tok.size());
  for (char c : tok) {
    if (c != '_') digits += c;
  }
  const bool looks_float = digits.find('.') != std::string::npos ||
                           digits.find('e') != std::string::npos ||
                           digits.find('E') != std::string::npos;
  if (!looks_float) {
    std::int64_t iv = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), iv);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return json(iv);
  }
  try {
    std::size_t used = 0;
    double dv = std::stod(digits, &used);
    if (used == digits.size()) return json(dv);
  } catch (const std::exception&) {
  }
  cur.fail("malformed number '" + tok + "'");
}

json parse_value(Cursor& cur) {
  if (cur.eof()) cur.fail("expected value");
  char c = cur.peek();
  if (c == '"') return json(parse_basic_string(cur));
  if (c == '[') return parse_array(cur);
  return parse_number_or_bool(cur);
}

// Splits a [section.name] path on dots; quoted segments keep dots verbatim.
std::vector<std::string> parse_section_path(Cursor& cur) {
  std::vector<std::string> path;
  while (true) {
    cur.skip_ws(false);
    path.push_back(parse_key(cur));
    cur.skip_ws(false);
    if (cur.eof()) cur.fail("unterminated section header");
    if (cur.peek() == '.') {
      cur.get();
      continue;
    }
    break;
  }
  return path;
}

json* descend(json& root, const std::vector<std::string>& path, Cursor& cur) {
  json* node = &root;
  for (const auto& key : path) {
    if (node->is_array()) {
      if (node->empty()) cur.fail("internal: empty table array");
      node = &node->back();
    }
    auto it = node->find(key);
    if (it == node->end()) {
      (*node)[key] = json::object();
      node = &(*node)[key];
    } else {
      node = &*it;
    }
  }
  if (node->is_array()) node = &node->back();
  if (!node->is_object()) cur.fail("section path collides with a value");
  return node;
}

}  // namespace

json parse(std::string_view text) {
  json root = json::object();
  json* current = &root;
  Cursor cur{text};

  while (true) {
    cur.skip_ws(true);
    if (cur.eof()) break;
    char c = cur.peek();
    if (c == '[') {
      cur.get();
      bool is_array_table = false;
      if (!cur.eof() && cur.peek() == '[') {
        cur.get();
        is_array_table = true;
      }
      std::vector<std::string> path = parse_section_path(cur);
      if (cur.eof() || cur.get() != ']') cur.fail("expected ']'");
      if (is_array_table && (cur.eof() || cur.get() != ']')) cur.fail("expected ']]'");

      if (is_array_table) {
        std::vector<std::string> parent_path(path.begin(), path.end() - 1);
        json* parent = descend(root, parent_path, cur);
        json& slot = (*parent)[path.back()];
        if (slot.is_null()) slot = json::array();
        if (!slot.is_array()) cur.fail("table array name already used as a value");
        slot.push_back(json::object());
        current = &slot.back();
      } else {
        current = descend(root, path, cur);
      }
      cur.expect_eol();
    } else {
      std::string key = parse_key(cur);
      cur.skip_ws(false);
      if (cur.eof() || cur.get() != '=') cur.fail("expected '=' after key '" + key + "'");
      cur.skip_ws(false);
      json value = parse_value(cur);
      if (current->contains(key)) cur.fail("duplicate key '" + key + "'");
      (*current)[key] = std::move(value);
      cur.expect_eol();
    }
  }
  return root;
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace bb::toml
