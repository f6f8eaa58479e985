#include <doctest.h>

#include <atomic>
#include <random>
#include <set>
#include <thread>

#include "sms/core/errors.hpp"
#include "sms/vocabulary/turtle.hpp"
#include "sms/vocabulary/vocabulary.hpp"
#include "support/fixtures.hpp"
#include "support/turtle_oracle.hpp"

using namespace sms;
using namespace sms::vocabulary;
using sms::testing::draft;

namespace {

const EntityId kAlice{"k1"};
const EntityId kCurator{"k2"};
constexpr std::string_view kBase = "https://sms.example";
const std::string kConcept = std::string(kSkos) + "Concept";

std::vector<std::string> terms_of(const TermPage& page) {
  std::vector<std::string> out;
  for (const auto& t : page.items) out.push_back(t.term);
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

// Cross-checks the state invariants of a vocabulary from its public views.
void check_invariants(const Vocabulary& v) {
  auto terms = v.all_terms();
  auto tickets = v.tickets();
  std::size_t proposed = 0, pending = 0;
  std::set<std::pair<Category, std::string>> keys;
  for (const auto& t : terms) {
    if (t.status == TermStatus::proposed) ++proposed;
    if (t.status != TermStatus::rejected) {
      INFO("duplicate key ", t.term);
      CHECK(keys.insert({t.category, fold_case(t.term)}).second);
    }
  }
  for (const auto& tk : tickets) {
    if (!tk.is_closed()) ++pending;
    auto term = v.get_term(tk.term_id);
    REQUIRE(term);
    CHECK((tk.state == TicketState::accepted) == (term->status == TermStatus::accepted ||
                                                  term->status == TermStatus::deprecated));
    CHECK((tk.state == TicketState::rejected) == (term->status == TermStatus::rejected));
    if (!tk.is_closed()) CHECK(term->status == TermStatus::proposed);
  }
  CHECK(proposed == pending);
}

}  // namespace

TEST_CASE("list_terms examples") {
  Vocabulary v;
  testing::load_seed(v);

  TermQuery q;
  q.category = Category::measured_quantity;
  q.status = TermStatus::accepted;
  q.text = "temperature";
  CHECK(contains(terms_of(v.list_terms(q)), "Air temperature"));

  q = {};
  q.category = Category::unit;
  q.status = TermStatus::accepted;
  CHECK(contains(terms_of(v.list_terms(q)), "°C"));

  q = {};
  q.category = Category::manufacturer;
  q.status = TermStatus::accepted;
  q.text = "zzz-no-match";
  auto page = v.list_terms(q);
  CHECK(page.items.empty());
  CHECK(page.total == 0);
}

TEST_CASE("list_terms sorts by term and paginates") {
  Vocabulary v;
  for (auto t : {"delta", "Alpha", "charlie", "bravo", "echo"}) v.upsert_accepted(draft(Category::unit, t));
  TermQuery q;
  q.page_size = 2;
  q.page = 1;
  CHECK(terms_of(v.list_terms(q)) == std::vector<std::string>{"Alpha", "bravo"});
  q.page = 3;
  auto last = v.list_terms(q);
  CHECK(terms_of(last) == std::vector<std::string>{"echo"});
  CHECK(last.total == 5);
  q.page = 4;
  CHECK(v.list_terms(q).items.empty());
}

TEST_CASE("propose_term examples") {
  Vocabulary v;
  testing::load_seed(v);

  auto p = v.propose_term(draft(Category::measured_quantity, "Sap flow velocity", "speed of sap movement"), kAlice);
  CHECK(p.term.status == TermStatus::proposed);
  CHECK(p.ticket.state == TicketState::open);
  CHECK(p.ticket.term_id == p.term.id);
  CHECK(p.ticket.submitted_by == kAlice);
  CHECK(v.tickets(TicketState::open).size() == 1);
  CHECK(v.check_reference(p.term.id, Category::measured_quantity) == RefState::unconfirmed);
  CHECK_FALSE(v.resolve(p.term.id));

  CHECK(code_of([&] { v.propose_term(draft(Category::measured_quantity, "Air temperature"), kAlice); }) ==
        ErrorCode::duplicate_term);
  // case-insensitive, and a pending proposal blocks a second one
  CHECK(code_of([&] { v.propose_term(draft(Category::measured_quantity, "air TEMPERATURE"), kAlice); }) ==
        ErrorCode::duplicate_term);
  CHECK(code_of([&] { v.propose_term(draft(Category::measured_quantity, "Sap flow velocity"), kAlice); }) ==
        ErrorCode::duplicate_term);
  // same text in another category is fine
  CHECK_NOTHROW(v.propose_term(draft(Category::equipment_type, "Air temperature"), kAlice));

  try {
    v.propose_term(draft(Category::unit, "  "), kAlice);
    FAIL("expected validation failure");
  } catch (const ValidationFailed& e) {
    CHECK(e.report().violations.at(0).path == "/term");
  }
  CHECK(code_of([&] { v.propose_term(draft(Category::unit, "x", "", "not a uri"), kAlice); }) ==
        ErrorCode::validation_failed);
  check_invariants(v);
}

TEST_CASE("curate examples") {
  Vocabulary v;
  testing::load_seed(v);
  auto p = v.propose_term(draft(Category::measured_quantity, "Sap flow velocity"), kAlice);

  SUBCASE("accept") {
    TermEdits edits;
    edits.definition = "velocity of sap in the xylem";
    auto r = v.curate(p.ticket.id, Decision::accept, edits, kCurator, true);
    CHECK(r.term.status == TermStatus::accepted);
    CHECK(r.term.definition == "velocity of sap in the xylem");
    CHECK(r.ticket.state == TicketState::accepted);
    CHECK(v.resolve(p.term.id));
    CHECK(v.check_reference(p.term.id, Category::measured_quantity) == RefState::ok);
    CHECK(code_of([&] { v.curate(p.ticket.id, Decision::reject, {}, kCurator, true); }) ==
          ErrorCode::invalid_state);
  }
  SUBCASE("reject reports references") {
    v.set_reference_finder([&](const EntityId& id) {
      return id == p.term.id ? std::vector<EntityId>{EntityId{"d7"}} : std::vector<EntityId>{};
    });
    auto r = v.curate(p.ticket.id, Decision::reject, {}, kCurator, true);
    CHECK(r.term.status == TermStatus::rejected);
    CHECK(r.referencing_entities == std::vector<EntityId>{EntityId{"d7"}});
    CHECK_FALSE(v.resolve(p.term.id));
    CHECK(v.check_reference(p.term.id, std::nullopt) == RefState::rejected);
    // a rejected term frees its key
    CHECK_NOTHROW(v.propose_term(draft(Category::measured_quantity, "Sap flow velocity"), kAlice));
  }
  SUBCASE("non-curator") {
    CHECK(code_of([&] { v.curate(p.ticket.id, Decision::accept, {}, kAlice, false); }) == ErrorCode::forbidden);
    CHECK(v.get_ticket(p.ticket.id)->state == TicketState::open);
  }
  SUBCASE("edit collides with an existing term") {
    TermEdits edits;
    edits.term = "AIR temperature";
    CHECK(code_of([&] { v.curate(p.ticket.id, Decision::accept, edits, kCurator, true); }) ==
          ErrorCode::duplicate_term);
    CHECK(v.get_term(p.term.id)->status == TermStatus::proposed);
  }
  SUBCASE("review then accept") {
    CHECK(v.start_review(p.ticket.id, kCurator, true).state == TicketState::in_review);
    v.comment(p.ticket.id, kAlice, "source is the SAPFLUXNET glossary");
    auto r = v.curate(p.ticket.id, Decision::accept, {}, kCurator, true);
    CHECK(r.ticket.discussion.size() == 3);
    CHECK(code_of([&] { v.start_review(p.ticket.id, kCurator, true); }) == ErrorCode::invalid_state);
  }
  check_invariants(v);
}

TEST_CASE("deprecated terms stay referenced but flagged") {
  Vocabulary v;
  auto [t, _] = v.upsert_accepted(draft(Category::unit, "mbar"));
  v.deprecate(t.id, true);
  CHECK(v.check_reference(t.id, Category::unit) == RefState::deprecated);
  CHECK(v.check_reference(t.id, Category::compartment) == RefState::wrong_category);
  CHECK(v.check_reference(EntityId{"v999"}, std::nullopt) == RefState::unknown);
  CHECK(code_of([&] { v.deprecate(t.id, true); }) == ErrorCode::invalid_state);
}

TEST_CASE("export_skos examples") {
  Vocabulary v;
  auto empty = testing::ttl::parse(v.export_skos(kBase));
  CHECK(empty.subjects_of_type(std::string(kSkos) + "ConceptScheme").size() == 10);
  CHECK(empty.subjects_of_type(kConcept).empty());

  testing::load_seed(v);
  v.propose_term(draft(Category::unit, "K"), kAlice);  // proposed terms are not exported
  auto text = v.export_skos(kBase);
  auto g = testing::ttl::parse(text);
  auto concepts = g.subjects_of_type(kConcept);
  CHECK(concepts.size() == testing::seed_terms().size());

  auto celsius = v.find(Category::unit, "°C");
  REQUIRE(celsius);
  auto iri = std::string(kBase) + "/cv/terms/" + celsius->id.value;
  CHECK(concepts.count(iri) == 1);
  auto match = g.objects(iri, std::string(kSkos) + "exactMatch");
  REQUIRE(match.size() == 1);
  CHECK(match[0].value == "http://qudt.org/vocab/unit/DEG_C");
  CHECK_FALSE(match[0].literal);
  CHECK(g.objects(iri, std::string(kSkos) + "prefLabel").at(0).value == "°C");
  CHECK(g.objects(iri, std::string(kSkos) + "inScheme").at(0).value == std::string(kBase) + "/cv/schemes/unit");

  CHECK(v.export_skos(kBase) == text);
}

TEST_CASE("export is a function of the accepted terms only") {
  Vocabulary a, b;
  testing::load_seed(a);
  testing::load_seed(b);
  auto p = b.propose_term(draft(Category::unit, "K"), kAlice);
  b.curate(p.ticket.id, Decision::reject, {}, kCurator, true);
  CHECK(a.export_skos(kBase) == b.export_skos(kBase));
}

TEST_CASE("literals with quotes, newlines and non-ASCII survive export") {
  Vocabulary v;
  TermDraft d = draft(Category::measured_quantity, "Soil \"moisture\"", "line one\nline two\\ end\ttab");
  d.synonyms = {"SWC", "θ"};
  d.provenance = "it's from \"somewhere\"";
  d.global_provenance = "gp-1";
  v.upsert_accepted(d);
  auto text = v.export_skos(kBase);
  auto g = testing::ttl::parse(text);
  auto id = v.find(Category::measured_quantity, "Soil \"moisture\"")->id;
  auto iri = std::string(kBase) + "/cv/terms/" + id.value;
  CHECK(g.objects(iri, std::string(kSkos) + "prefLabel").at(0).value == "Soil \"moisture\"");
  CHECK(g.objects(iri, std::string(kSkos) + "definition").at(0).value == "line one\nline two\\ end\ttab");
  CHECK(g.objects(iri, std::string(kSkos) + "altLabel").size() == 2);

  // and the library reader recovers the same draft
  auto rows = drafts_from_skos(parse_turtle(text));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].draft.term == d.term);
  CHECK(rows[0].draft.definition == d.definition);
  CHECK(rows[0].draft.synonyms == d.synonyms);
  CHECK(rows[0].draft.provenance == d.provenance);
  CHECK(rows[0].draft.global_provenance == d.global_provenance);
}

TEST_CASE("export then import into a fresh vocabulary gives equal accepted-term sets") {
  Vocabulary a;
  testing::load_seed(a);
  auto rows = drafts_from_skos(parse_turtle(a.export_skos(kBase)));
  Vocabulary b;
  auto summary = b.import_terms(rows);
  CHECK(summary.created == testing::seed_terms().size());
  auto key = [](const Vocabulary& v) {
    std::set<std::string> out;
    for (const auto& t : v.all_terms()) {
      if (t.status != TermStatus::accepted) continue;
      auto j = encode(t);
      j.erase("id");
      out.insert(j.dump());
    }
    return out;
  };
  CHECK(key(a) == key(b));
  // importing again changes nothing
  auto again = b.import_terms(rows);
  CHECK(again.created == 0);
  CHECK(again.unchanged == rows.size());
}

TEST_CASE("json-lines import") {
  std::string text =
      "# units\n"
      "{\"category\":\"unit\",\"term\":\"°C\",\"definition\":\"degree Celsius\"}\n"
      "\n"
      "{\"category\":\"unit\",\"term\":\"hPa\"}\n"
      "{\"category\":\"unit\",\"term\":\"°c\",\"definition\":\"dup\"}\n";
  auto rows = parse_terms_jsonl(text);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].line == 2);
  CHECK(rows[2].line == 5);
  Vocabulary v;
  auto s = v.import_terms(rows);
  CHECK(s.created == 2);
  CHECK(s.skipped == 1);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].rfind("line 5:", 0) == 0);
  CHECK(v.find(Category::unit, "°C")->definition == "degree Celsius");

  try {
    parse_terms_jsonl("{\"category\":\"unit\",\"term\":\"a\"}\n{\"category\":\"unit\",\"term\":\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.detail()["line"] == 2);
  }
  try {
    parse_terms_jsonl("{\"category\":\"units\",\"term\":\"a\"}\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.detail()["line"] == 1);
  }
}

TEST_CASE("import accepts a pending proposal and closes its ticket") {
  Vocabulary v;
  auto p = v.propose_term(draft(Category::unit, "hPa"), kAlice);
  auto [t, outcome] = v.upsert_accepted(draft(Category::unit, "hPa", "hectopascal"));
  CHECK(outcome == Vocabulary::UpsertOutcome::updated);
  CHECK(t.id == p.term.id);
  CHECK(t.status == TermStatus::accepted);
  CHECK(v.get_ticket(p.ticket.id)->state == TicketState::accepted);
  check_invariants(v);
}

TEST_CASE("turtle reader") {
  auto triples = parse_turtle(
      "PREFIX ex: <http://ex.org/>\n"
      "@base <http://base.org/> .\n"
      "<s> ex:p \"\"\"multi\nline\"\"\"@en , 'single' ;\n"
      "    a ex:T ;\n"
      "    ex:n 42, -1.5, 2e3, true ;\n"
      "    ex:b [ ex:q ex:r ] ;\n"
      "    ex:d \"x\"^^ex:dt .\n"
      "_:b1 ex:p \"\\u00e9\" .\n");
  REQUIRE(triples.size() == 11);
  CHECK(triples[0].subject.value == "http://base.org/s");
  CHECK(triples[0].object.value == "multi\nline");
  CHECK(triples[0].object.language == "en");
  CHECK(triples[1].object.value == "single");
  CHECK(triples[2].predicate.value == kRdfType);
  CHECK(triples[3].object.datatype == "http://www.w3.org/2001/XMLSchema#integer");
  CHECK(triples[5].object.datatype == "http://www.w3.org/2001/XMLSchema#double");
  CHECK(triples[9].object.datatype == "http://ex.org/dt");
  CHECK(triples[10].subject.type == Term::Type::blank);
  CHECK(triples[10].object.value == "é");

  try {
    parse_turtle("@prefix ex: <http://ex.org/> .\n\nex:s ex:p ex:o ;\n  nope:p ex:o .\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.detail()["line"] == 4);
  }
  CHECK_THROWS_AS(parse_turtle("<s> <p> \"unterminated .\n"), Error);
  CHECK_THROWS_AS(parse_turtle("<s> <p> <o>\n"), Error);
}

TEST_CASE("skos reader reports the line of a concept without a scheme") {
  std::string text =
      "@prefix skos: <http://www.w3.org/2004/02/skos/core#> .\n"
      "<http://x/cv/terms/v1> a skos:Concept ;\n"
      "    skos:prefLabel \"m\" .\n";
  try {
    drafts_from_skos(parse_turtle(text));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.detail()["line"] == 2);
  }
}

TEST_CASE("a failing sink leaves the vocabulary unchanged") {
  Vocabulary v;
  bool fail = true;
  v.set_sink([&](const std::vector<nlohmann::json>&) {
    if (fail) throw Error(ErrorCode::internal, "disk full");
  });
  CHECK_THROWS(v.propose_term(draft(Category::unit, "K"), kAlice));
  CHECK(v.size() == 0);
  CHECK(v.tickets().empty());
  fail = false;
  CHECK_NOTHROW(v.propose_term(draft(Category::unit, "K"), kAlice));
}

TEST_CASE("journal records replay to the same state") {
  Vocabulary v;
  std::vector<nlohmann::json> journal;
  v.set_sink([&](const std::vector<nlohmann::json>& recs) {
    for (const auto& r : recs) journal.push_back(nlohmann::json::parse(r.dump()));
  });
  testing::load_seed(v);
  auto p = v.propose_term(draft(Category::unit, "K"), kAlice);
  v.comment(p.ticket.id, kCurator, "which K?");
  v.curate(p.ticket.id, Decision::accept, {}, kCurator, true);
  v.propose_term(draft(Category::unit, "hPa"), kAlice);

  Vocabulary r;
  for (const auto& rec : journal) r.apply(rec);
  CHECK(r.all_terms() == v.all_terms());
  CHECK(r.tickets() == v.tickets());
  CHECK(r.export_skos(kBase) == v.export_skos(kBase));
  // ids keep increasing after replay
  auto next = r.propose_term(draft(Category::unit, "Pa"), kAlice);
  for (const auto& t : v.all_terms()) CHECK(t.id != next.term.id);
}

TEST_CASE("property: invariants hold under randomized propose/curate sequences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    Vocabulary v;
    static const char* words[] = {"alpha", "Alpha", "beta", "gamma", "delta", "ALPHA", "beta ", "eps"};
    for (int op = 0; op < 200; ++op) {
      int kind = pick(4);
      try {
        if (kind <= 1) {
          v.propose_term(draft(static_cast<Category>(pick(3)), words[pick(8)]), kAlice);
        } else {
          auto open = v.tickets();
          if (open.empty()) continue;
          const auto& t = open[pick(static_cast<int>(open.size()))];
          if (kind == 2) {
            std::optional<TermEdits> edits;
            if (pick(3) == 0) edits = TermEdits{.term = std::string(words[pick(8)])};
            v.curate(t.id, Decision::accept, edits, kCurator, true);
          } else {
            v.curate(t.id, Decision::reject, {}, kCurator, true);
          }
        }
      } catch (const Error& e) {
        CHECK((e.code() == ErrorCode::duplicate_term || e.code() == ErrorCode::invalid_state));
      }
    }
    check_invariants(v);
  }
}

TEST_CASE("concurrent proposals of the same term: exactly one succeeds") {
  for (int trial = 0; trial < 20; ++trial) {
    Vocabulary v;
    std::atomic<int> ok{0}, dup{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) {
      threads.emplace_back([&] {
        try {
          v.propose_term(draft(Category::unit, "Bq"), kAlice);
          ++ok;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::duplicate_term) ++dup;
        }
      });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 1);
    CHECK(dup == 3);
  }
}
