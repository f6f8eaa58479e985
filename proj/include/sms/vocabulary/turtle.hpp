#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sms/vocabulary/vocabulary.hpp"

namespace sms::vocabulary {

inline constexpr std::string_view kSkos = "http://www.w3.org/2004/02/skos/core#";
inline constexpr std::string_view kDcterms = "http://purl.org/dc/terms/";
inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

struct Term {
  enum class Type { iri, blank, literal };
  Type type = Type::iri;
  std::string value;     // absolute IRI, blank label or lexical form
  std::string language;  // literals only
  std::string datatype;  // literals only, empty for plain strings

  friend bool operator==(const Term&, const Term&) = default;
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;
  std::size_t line = 0;  // line of the subject
};

// Turtle reader covering prefixes, base, prefixed names, `a`, predicate and
// object lists, blank node property lists, collections are not supported.
// Errors are Error(bad_request) with "line N: ..." and detail {"line": N}.
std::vector<Triple> parse_turtle(std::string_view text, std::string_view base = "");

// Escapes a string for a double-quoted Turtle literal.
std::string turtle_escape(std::string_view s);
// True when `uri` can be written as an IRIREF without escaping.
bool is_plain_iri(std::string_view uri);

// Reads concepts from a SKOS export. The category comes from the
// skos:inScheme scheme IRI (".../cv/schemes/{category}").
std::vector<ImportRow> drafts_from_skos(const std::vector<Triple>& triples);

// One JSON object per line, fields as in the term record. Blank lines and
// lines starting with '#' are ignored.
std::vector<ImportRow> parse_terms_jsonl(std::string_view text);

}  // namespace sms::vocabulary
