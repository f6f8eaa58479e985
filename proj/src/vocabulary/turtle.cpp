#include "sms/vocabulary/turtle.hpp"

#include <cstdio>
#include <map>

#include "sms/core/errors.hpp"

namespace sms::vocabulary {

using nlohmann::json;

namespace {

constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::bad_request, "line " + std::to_string(line) + ": " + what, json{{"line", line}});
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_name_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-' || c == '.' || u >= 0x80;
}

class Parser {
 public:
  Parser(std::string_view text, std::string_view base) : s_(text), base_(base) {}

  std::vector<Triple> run() {
    skip_ws();
    while (pos_ < s_.size()) {
      statement();
      skip_ws();
    }
    return std::move(out_);
  }

 private:
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

  char get() {
    char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      char c = peek();
      if (c == '#') {
        while (pos_ < s_.size() && peek() != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail_at(line_, std::string("expected '") + c + "'");
    get();
  }

  bool keyword(std::string_view kw, bool case_insensitive) {
    if (s_.size() - pos_ < kw.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i) {
      char a = s_[pos_ + i], b = kw[i];
      if (case_insensitive) {
        a = static_cast<char>(std::tolower(static_cast<unsigned char>(a)));
        b = static_cast<char>(std::tolower(static_cast<unsigned char>(b)));
      }
      if (a != b) return false;
    }
    char after = pos_ + kw.size() < s_.size() ? s_[pos_ + kw.size()] : ' ';
    if (is_name_char(after) || after == ':') return false;
    pos_ += kw.size();
    return true;
  }

  void statement() {
    if (peek() == '@') {
      get();
      if (keyword("prefix", false)) {
        prefix_decl(true);
      } else if (keyword("base", false)) {
        base_decl(true);
      } else {
        fail_at(line_, "unknown directive");
      }
      return;
    }
    if (keyword("PREFIX", true)) return prefix_decl(false);
    if (keyword("BASE", true)) return base_decl(false);
    std::size_t line = line_;
    Term subject;
    if (peek() == '[') {
      subject = blank_property_list();
      skip_ws();
      if (peek() == '.') {
        get();
        return;
      }
    } else {
      subject = resource_or_blank();
    }
    predicate_object_list(subject, line);
    expect('.');
  }

  void prefix_decl(bool dotted) {
    skip_ws();
    std::string name;
    while (peek() != ':' && is_name_char(peek())) name += get();
    if (peek() != ':') fail_at(line_, "expected ':' in prefix declaration");
    get();
    skip_ws();
    prefixes_[name] = iriref();
    if (dotted) expect('.');
  }

  void base_decl(bool dotted) {
    skip_ws();
    base_ = iriref();
    if (dotted) expect('.');
  }

  std::string resolve(const std::string& iri) const {
    auto colon = iri.find(':');
    bool absolute = colon != std::string::npos && colon > 0 &&
                    iri.find_first_of("/?#") > colon;
    return absolute ? iri : base_ + iri;
  }

  std::uint32_t hex(int digits) {
    std::uint32_t v = 0;
    for (int i = 0; i < digits; ++i) {
      char c = peek();
      if (!std::isxdigit(static_cast<unsigned char>(c))) fail_at(line_, "bad unicode escape");
      get();
      v = v * 16 + static_cast<std::uint32_t>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                                                                                          : std::tolower(c) - 'a' + 10);
    }
    return v;
  }

  std::string iriref() {
    if (peek() != '<') fail_at(line_, "expected an IRI");
    get();
    std::string iri;
    while (true) {
      if (pos_ >= s_.size()) fail_at(line_, "unterminated IRI");
      char c = get();
      if (c == '>') break;
      if (c == '\\') {
        char e = get();
        if (e == 'u') {
          append_utf8(iri, hex(4));
        } else if (e == 'U') {
          append_utf8(iri, hex(8));
        } else {
          fail_at(line_, "bad escape in IRI");
        }
        continue;
      }
      if (c == ' ' || c == '\n' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' || c == '`' ||
          c == '<' || static_cast<unsigned char>(c) < 0x20)
        fail_at(line_, "illegal character in IRI");
      iri += c;
    }
    return resolve(iri);
  }

  std::string prefixed_name() {
    std::string prefix;
    while (peek() != ':' && is_name_char(peek())) prefix += get();
    if (peek() != ':') fail_at(line_, "expected a prefixed name");
    get();
    std::string local;
    while (is_name_char(peek()) || peek() == ':' || peek() == '%' || peek() == '\\') {
      if (peek() == '\\') {
        get();
        local += get();
        continue;
      }
      local += get();
    }
    while (!local.empty() && local.back() == '.') {
      local.pop_back();
      --pos_;
    }
    auto it = prefixes_.find(prefix);
    if (it == prefixes_.end()) fail_at(line_, "undeclared prefix '" + prefix + "'");
    return it->second + local;
  }

  Term resource_or_blank() {
    skip_ws();
    if (peek() == '<') return {Term::Type::iri, iriref(), {}, {}};
    if (peek() == '_' && peek(1) == ':') {
      pos_ += 2;
      std::string label;
      while (is_name_char(peek())) label += get();
      while (!label.empty() && label.back() == '.') {
        label.pop_back();
        --pos_;
      }
      if (label.empty()) fail_at(line_, "empty blank node label");
      return {Term::Type::blank, label, {}, {}};
    }
    if (peek() == '(') fail_at(line_, "collections are not supported");
    return {Term::Type::iri, prefixed_name(), {}, {}};
  }

  Term blank_property_list() {
    std::size_t line = line_;
    get();  // '['
    Term node{Term::Type::blank, "b" + std::to_string(++blank_seq_), {}, {}};
    skip_ws();
    if (peek() != ']') predicate_object_list(node, line);
    expect(']');
    return node;
  }

  void predicate_object_list(const Term& subject, std::size_t line) {
    while (true) {
      skip_ws();
      Term predicate;
      if (peek() == 'a' && !is_name_char(peek(1)) && peek(1) != ':') {
        get();
        predicate = {Term::Type::iri, std::string(kRdfType), {}, {}};
      } else {
        predicate = resource_or_blank();
        if (predicate.type != Term::Type::iri) fail_at(line_, "predicate must be an IRI");
      }
      while (true) {
        Term object = object_term();
        out_.push_back({subject, predicate, std::move(object), line});
        skip_ws();
        if (peek() != ',') break;
        get();
      }
      skip_ws();
      if (peek() != ';') return;
      while (peek() == ';') {
        get();
        skip_ws();
      }
      if (peek() == '.' || peek() == ']') return;
    }
  }

  std::string quoted() {
    char q = get();
    bool long_form = peek() == q && peek(1) == q;
    if (long_form) {
      get();
      get();
    } else if (peek() == q) {
      get();
      return {};
    }
    std::string value;
    while (true) {
      if (pos_ >= s_.size()) fail_at(line_, "unterminated string");
      char c = peek();
      if (long_form && c == q && peek(1) == q && peek(2) == q) {
        pos_ += 3;
        // Up to two further quotes belong to the content ("""a"""" is a" + ").
        while (peek() == q) {
          value += q;
          get();
        }
        return value;
      }
      if (!long_form && c == q) {
        get();
        return value;
      }
      if (!long_form && (c == '\n' || c == '\r')) fail_at(line_, "newline in string");
      get();
      if (c != '\\') {
        value += c;
        continue;
      }
      char e = get();
      switch (e) {
        case 't': value += '\t'; break;
        case 'b': value += '\b'; break;
        case 'n': value += '\n'; break;
        case 'r': value += '\r'; break;
        case 'f': value += '\f'; break;
        case '"': value += '"'; break;
        case '\'': value += '\''; break;
        case '\\': value += '\\'; break;
        case 'u': append_utf8(value, hex(4)); break;
        case 'U': append_utf8(value, hex(8)); break;
        default: fail_at(line_, std::string("bad escape '\\") + e + "'");
      }
    }
  }

  Term object_term() {
    skip_ws();
    char c = peek();
    if (c == '"' || c == '\'') {
      Term lit{Term::Type::literal, quoted(), {}, {}};
      if (peek() == '@') {
        get();
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-') lit.language += get();
        if (lit.language.empty()) fail_at(line_, "empty language tag");
      } else if (peek() == '^' && peek(1) == '^') {
        pos_ += 2;
        lit.datatype = resource_or_blank().value;
      }
      return lit;
    }
    if (c == '[') return blank_property_list();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      std::string num;
      while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' || peek() == 'e' ||
             peek() == 'E' || (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))))
        num += get();
      bool dbl = num.find_first_of("eE") != std::string::npos;
      bool dec = num.find('.') != std::string::npos;
      return {Term::Type::literal, num, {},
              std::string(kXsd) + (dbl ? "double" : dec ? "decimal" : "integer")};
    }
    if (keyword("true", false)) return {Term::Type::literal, "true", {}, std::string(kXsd) + "boolean"};
    if (keyword("false", false)) return {Term::Type::literal, "false", {}, std::string(kXsd) + "boolean"};
    return resource_or_blank();
  }

  std::string_view s_;
  std::string base_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t blank_seq_ = 0;
  std::map<std::string, std::string> prefixes_;
  std::vector<Triple> out_;
};

}  // namespace

std::vector<Triple> parse_turtle(std::string_view text, std::string_view base) { return Parser(text, base).run(); }

std::string turtle_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04X", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

bool is_plain_iri(std::string_view uri) {
  if (uri.empty()) return false;
  for (char c : uri) {
    auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' ||
        c == '`' || c == '\\')
      return false;
  }
  return true;
}

std::vector<ImportRow> drafts_from_skos(const std::vector<Triple>& triples) {
  const std::string skos(kSkos), dct(kDcterms);
  struct Node {
    std::size_t line = 0;
    bool is_concept = false;
    std::optional<std::string> scheme;
    ImportRow row;
    bool has_label = false;
  };
  std::map<std::string, Node> nodes;
  std::vector<std::string> order;
  for (const auto& t : triples) {
    if (t.subject.type != Term::Type::iri) continue;
    auto [it, inserted] = nodes.try_emplace(t.subject.value);
    auto& n = it->second;
    if (inserted) {
      n.line = t.line;
      n.row.line = t.line;
      order.push_back(t.subject.value);
    }
    const auto& p = t.predicate.value;
    const auto& o = t.object;
    auto literal = [&]() -> const std::string& {
      if (o.type != Term::Type::literal) fail_at(t.line, "expected a literal for <" + p + ">");
      return o.value;
    };
    if (p == kRdfType && o.value == skos + "Concept") {
      n.is_concept = true;
    } else if (p == skos + "inScheme") {
      n.scheme = o.value;
    } else if (p == skos + "prefLabel") {
      n.row.draft.term = literal();
      n.has_label = true;
    } else if (p == skos + "definition") {
      n.row.draft.definition = literal();
    } else if (p == skos + "altLabel") {
      n.row.draft.synonyms.push_back(literal());
    } else if (p == skos + "exactMatch") {
      if (o.type != Term::Type::iri) fail_at(t.line, "skos:exactMatch must be an IRI");
      n.row.draft.provenance_uri = o.value;
    } else if (p == dct + "source") {
      n.row.draft.provenance = literal();
    } else if (p == dct + "provenance") {
      n.row.draft.global_provenance = literal();
    }
  }
  std::vector<ImportRow> rows;
  for (const auto& key : order) {
    auto& n = nodes[key];
    if (!n.is_concept) continue;
    if (!n.scheme) fail_at(n.line, "concept <" + key + "> has no skos:inScheme");
    auto slash = n.scheme->rfind('/');
    auto category = category_from_string(slash == std::string::npos ? *n.scheme : n.scheme->substr(slash + 1));
    if (!category) fail_at(n.line, "concept <" + key + "> is in an unknown scheme <" + *n.scheme + ">");
    if (!n.has_label) fail_at(n.line, "concept <" + key + "> has no skos:prefLabel");
    n.row.draft.category = *category;
    rows.push_back(std::move(n.row));
  }
  return rows;
}

std::vector<ImportRow> parse_terms_jsonl(std::string_view text) {
  std::vector<ImportRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') {
      if (end == text.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at(line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      if (j.is_object() && j.contains("status") && j["status"] != "accepted")
        fail_at(line_no, "only accepted terms can be imported");
      rows.push_back({line_no, decode_draft(j, "")});
    } catch (const Error& e) {
      if (e.detail().contains("line")) throw;
      fail_at(line_no, e.what());
    }
    if (end == text.size()) break;
  }
  return rows;
}

}  // namespace sms::vocabulary
