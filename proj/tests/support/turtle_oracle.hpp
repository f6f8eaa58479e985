#pragma once

// Minimal Turtle reader written separately from the library's reader. It
// tokenizes the whole document first and then folds tokens into triples.
// Supports @prefix/PREFIX, IRIs, prefixed names, `a`, plain/long literals
// with escapes, language tags, datatypes, predicate lists (;) and object
// lists (,). Anything else is a parse failure.

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace sms::testing::ttl {

struct Node {
  bool literal = false;
  std::string value;
  std::string lang;
  std::string datatype;
  bool operator<(const Node& o) const {
    return std::tie(literal, value, lang, datatype) < std::tie(o.literal, o.value, o.lang, o.datatype);
  }
  bool operator==(const Node& o) const = default;
};

struct Statement {
  Node s, p, o;
  bool operator<(const Statement& x) const { return std::tie(s, p, o) < std::tie(x.s, x.p, x.o); }
};

struct Graph {
  std::set<Statement> triples;

  std::set<std::string> subjects_of_type(const std::string& type_iri) const {
    std::set<std::string> out;
    for (const auto& t : triples) {
      if (t.p.value == "http://www.w3.org/1999/02/22-rdf-syntax-ns#type" && t.o.value == type_iri && !t.o.literal)
        out.insert(t.s.value);
    }
    return out;
  }
  std::vector<Node> objects(const std::string& s, const std::string& p) const {
    std::vector<Node> out;
    for (const auto& t : triples) {
      if (t.s.value == s && t.p.value == p) out.push_back(t.o);
    }
    return out;
  }
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

enum class Tok { iri, pname, literal, dot, semi, comma, kw_a, prefix_kw, lang, dtype };

struct Token {
  Tok kind;
  std::string text;
  std::string extra;  // prefix for pname
};

inline void put_utf8(std::string& out, unsigned long cp) {
  if (cp <= 0x7F) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7FF) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp <= 0xFFFF) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> toks;
  std::size_t i = 0, n = src.size();
  auto namechar = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
           static_cast<unsigned char>(c) >= 0x80;
  };
  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#') {
      while (i < n && src[i] != '\n') ++i;
    } else if (c == '<') {
      auto j = src.find('>', i);
      if (j == std::string::npos) throw ParseError("unterminated IRI");
      std::string iri = src.substr(i + 1, j - i - 1);
      for (char x : iri) {
        if (std::isspace(static_cast<unsigned char>(x)) || x == '"' || x == '<') throw ParseError("bad IRI " + iri);
      }
      toks.push_back({Tok::iri, iri, {}});
      i = j + 1;
    } else if (c == '"' || c == '\'') {
      bool longq = i + 2 < n && src[i + 1] == c && src[i + 2] == c;
      std::size_t j = i + (longq ? 3 : 1);
      std::string val;
      for (;;) {
        if (j >= n) throw ParseError("unterminated literal");
        if (longq && src.compare(j, 3, std::string(3, c)) == 0 && (j + 3 >= n || src[j + 3] != c)) {
          j += 3;
          break;
        }
        if (!longq && src[j] == c) {
          ++j;
          break;
        }
        if (!longq && src[j] == '\n') throw ParseError("newline in short literal");
        if (src[j] == '\\') {
          if (j + 1 >= n) throw ParseError("dangling escape");
          char e = src[j + 1];
          j += 2;
          static const std::map<char, char> simple{{'n', '\n'}, {'t', '\t'}, {'r', '\r'}, {'b', '\b'},
                                                   {'f', '\f'}, {'"', '"'},  {'\'', '\''}, {'\\', '\\'}};
          if (auto it = simple.find(e); it != simple.end()) {
            val.push_back(it->second);
          } else if (e == 'u' || e == 'U') {
            std::size_t len = e == 'u' ? 4 : 8;
            if (j + len > n) throw ParseError("short unicode escape");
            put_utf8(val, std::stoul(src.substr(j, len), nullptr, 16));
            j += len;
          } else {
            throw ParseError(std::string("unknown escape \\") + e);
          }
          continue;
        }
        val.push_back(src[j++]);
      }
      toks.push_back({Tok::literal, val, {}});
      i = j;
    } else if (c == '@') {
      std::size_t j = i + 1;
      while (j < n && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '-')) ++j;
      std::string word = src.substr(i + 1, j - i - 1);
      if (word == "prefix") {
        toks.push_back({Tok::prefix_kw, "@prefix", {}});
      } else {
        if (toks.empty() || toks.back().kind != Tok::literal) throw ParseError("stray language tag");
        toks.push_back({Tok::lang, word, {}});
      }
      i = j;
    } else if (c == '^' && i + 1 < n && src[i + 1] == '^') {
      toks.push_back({Tok::dtype, "^^", {}});
      i += 2;
    } else if (c == '.') {
      toks.push_back({Tok::dot, ".", {}});
      ++i;
    } else if (c == ';') {
      toks.push_back({Tok::semi, ";", {}});
      ++i;
    } else if (c == ',') {
      toks.push_back({Tok::comma, ",", {}});
      ++i;
    } else if (namechar(c) || c == ':') {
      std::size_t j = i;
      while (j < n && (namechar(src[j]) || src[j] == ':' || (src[j] == '.' && j + 1 < n && namechar(src[j + 1]))))
        ++j;
      std::string word = src.substr(i, j - i);
      i = j;
      if (word == "a") {
        toks.push_back({Tok::kw_a, word, {}});
      } else if (word == "PREFIX" || word == "prefix") {
        toks.push_back({Tok::prefix_kw, word, {}});
      } else {
        auto colon = word.find(':');
        if (colon == std::string::npos) throw ParseError("bare word " + word);
        toks.push_back({Tok::pname, word.substr(colon + 1), word.substr(0, colon)});
      }
    } else {
      throw ParseError(std::string("unexpected character ") + c);
    }
  }
  return toks;
}

}  // namespace detail

inline Graph parse(const std::string& text) {
  using detail::Tok;
  auto toks = detail::tokenize(text);
  std::map<std::string, std::string> ns;
  Graph g;
  std::size_t k = 0;
  auto at = [&](std::size_t i) -> const detail::Token& {
    if (i >= toks.size()) throw ParseError("unexpected end of document");
    return toks[i];
  };
  auto term = [&](bool allow_literal) -> Node {
    const auto& t = at(k++);
    if (t.kind == Tok::iri) return {false, t.text, {}, {}};
    if (t.kind == Tok::pname) {
      auto it = ns.find(t.extra);
      if (it == ns.end()) throw ParseError("unknown prefix " + t.extra);
      return {false, it->second + t.text, {}, {}};
    }
    if (t.kind == Tok::literal && allow_literal) {
      Node lit{true, t.text, {}, {}};
      if (k < toks.size() && toks[k].kind == Tok::lang) lit.lang = toks[k++].text;
      else if (k < toks.size() && toks[k].kind == Tok::dtype) {
        ++k;
        lit.datatype = [&] {
          const auto& d = at(k++);
          if (d.kind == Tok::iri) return d.text;
          if (d.kind == Tok::pname && ns.count(d.extra)) return ns[d.extra] + d.text;
          throw ParseError("bad datatype");
        }();
      }
      return lit;
    }
    throw ParseError("unexpected token '" + t.text + "'");
  };
  while (k < toks.size()) {
    if (toks[k].kind == Tok::prefix_kw) {
      bool at_form = toks[k].text == "@prefix";
      ++k;
      const auto& p = at(k++);
      if (p.kind != Tok::pname || !p.text.empty()) throw ParseError("bad prefix name");
      const auto& iri = at(k++);
      if (iri.kind != Tok::iri) throw ParseError("prefix needs an IRI");
      ns[p.extra] = iri.text;
      if (at_form) {
        if (at(k).kind != Tok::dot) throw ParseError("prefix declaration needs '.'");
        ++k;
      }
      continue;
    }
    Node s = term(false);
    for (;;) {
      Node p;
      if (at(k).kind == Tok::kw_a) {
        ++k;
        p = {false, "http://www.w3.org/1999/02/22-rdf-syntax-ns#type", {}, {}};
      } else {
        p = term(false);
      }
      for (;;) {
        g.triples.insert({s, p, term(true)});
        if (at(k).kind != Tok::comma) break;
        ++k;
      }
      if (at(k).kind == Tok::semi) {
        ++k;
        if (at(k).kind == Tok::dot) break;
        continue;
      }
      break;
    }
    if (at(k).kind != Tok::dot) throw ParseError("statement must end with '.'");
    ++k;
  }
  return g;
}

}  // namespace sms::testing::ttl
