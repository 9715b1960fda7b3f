#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "support/ast_gen.hpp"
#include "xqfed/errors.hpp"
#include "xqfed/parser.hpp"
#include "xqfed/serialize.hpp"

using namespace xqfed;

namespace {

std::string readDataFile(const std::string& rel) {
  std::ifstream in(std::string(XQFED_TEST_DATA_DIR) + "/" + rel);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ErrorCode parseErrorCode(const std::string& text) {
  try {
    parseExtendedQuery(text);
  } catch (const ParseError& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::SyntaxError;
}

}  // namespace

TEST_CASE("the hybrid example query parses into the expected structure") {
  ExtendedQuery q = parseExtendedQuery(readDataFile("queries/country_safety.rq"));
  CHECK(q.selectVars == std::vector<Variable>{Variable{"s"}});
  CHECK(q.where.triples.size() == 3);  // ';' predicate list expands
  CHECK(q.where.services.size() == 1);
  CHECK(q.where.services[0].hasSubselect);
  CHECK(q.where.services[0].endpointIri == "http://dbpedia.org/sparql");
  REQUIRE(q.where.xqueryFilters.size() == 1);
  CHECK(q.where.xqueryFilters[0].linkVariable == Variable{"doc"});
  CHECK(q.where.xqueryFilters[0].body.letClauses.size() == 1);
}

TEST_CASE("plain SPARQL passes through with no filter clauses") {
  ExtendedQuery q = parseExtendedQuery("SELECT ?s WHERE { ?s ?p ?o . }");
  CHECK(q.where.xqueryFilters.empty());
  CHECK(q.selectVars.size() == 1);
  CHECK(q.where.triples.size() == 1);
}

TEST_CASE("a second SPARQL variable in the XQuery body is rejected") {
  std::string text = R"(SELECT ?s
WHERE { ?s ex:safetyInfo ?doc ; ex:extra ?other .
  XQueryFILTER (
     LET $x := doc(?doc)//mail
     RETURN contains($x, ?other)
  ) .
})";
  CHECK(parseErrorCode(text) == ErrorCode::MultipleSparqlVarsInXQuery);
}

TEST_CASE("an XQuery body without SPARQL variables is rejected") {
  std::string text = R"(SELECT ?s
WHERE { ?s ex:safetyInfo ?doc .
  XQueryFILTER ( RETURN contains(doc('a.xml'), 'x') ) .
})";
  CHECK(parseErrorCode(text) == ErrorCode::NoSparqlVarInXQuery);
}

TEST_CASE("non-boolean RETURN heads are rejected") {
  std::string text = R"(SELECT ?s
WHERE { ?s ex:safetyInfo ?doc .
  XQueryFILTER ( RETURN doc(?doc)//mail ) .
})";
  CHECK(parseErrorCode(text) == ErrorCode::NonBooleanReturn);
}

TEST_CASE("a link variable absent from the triples is rejected") {
  std::string text = R"(SELECT ?s
WHERE { ?s ex:p ?o .
  XQueryFILTER ( RETURN contains(doc(?nowhere), 'x') ) .
})";
  CHECK(parseErrorCode(text) == ErrorCode::LinkVarNotInPattern);
}

TEST_CASE("at most one XQueryFILTER per query") {
  std::string text = R"(SELECT ?s
WHERE { ?s ex:a ?d ; ex:b ?e .
  XQueryFILTER ( RETURN contains(doc(?d), 'x') ) .
  XQueryFILTER ( RETURN contains(doc(?e), 'y') ) .
})";
  CHECK(parseErrorCode(text) == ErrorCode::MultipleXQueryFilters);
}

TEST_CASE("XQueryFILTER is rejected inside SERVICE") {
  std::string text = R"(SELECT ?s
WHERE { ?s ex:a ?d .
  SERVICE <http://remote/sparql> {
    ?s ex:b ?e .
    XQueryFILTER ( RETURN contains(doc(?e), 'x') ) .
  }
})";
  CHECK(parseErrorCode(text) == ErrorCode::XQueryFilterInService);
}

TEST_CASE("syntax errors carry a position inside the input") {
  std::string text = "SELECT ?s\nWHERE { ?s ex:p }";
  try {
    parseExtendedQuery(text);
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(e.line() == 2);
    CHECK(e.column() >= 1);
    CHECK(e.column() <= int(text.size()));
    CHECK_FALSE(e.expected().empty());
  }
}

TEST_CASE("FLWR body errors report positions in the enclosing query") {
  std::string text = "SELECT ?s\nWHERE { ?s ex:p ?d .\nXQueryFILTER (\nRETURN ~bad\n) .\n}";
  try {
    parseExtendedQuery(text);
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(e.line() == 4);
  }
}

TEST_CASE("the plain XQuery example parses as a FOR query with a conjunctive WHERE") {
  FlwrQuery q = parseFlwr(readDataFile("queries/mail_search.xq"));
  CHECK(q.forClauses.size() == 1);
  CHECK(q.forClauses[0].var == "d");
  REQUIRE(q.whereExpr.has_value());
  CHECK(q.whereExpr->kind == XqExpr::Kind::BoolOp);
  CHECK(q.whereExpr->value == "and");
  CHECK(q.returnExpr.kind == XqExpr::Kind::XqVarRef);
}

TEST_CASE("minimal FLWR is just a RETURN") {
  FlwrQuery q = parseFlwr("RETURN true()");
  CHECK(q.forClauses.empty());
  CHECK(q.letClauses.empty());
  CHECK_FALSE(q.whereExpr.has_value());
  CHECK(q.returnExpr.kind == XqExpr::Kind::FunctionCall);
}

TEST_CASE("the canonical rewrite text parses and re-serializes to itself") {
  std::string golden = readDataFile("goldens/parallel_rewrite.golden.xq");
  CHECK(serialize(parseFlwr(golden)) == golden);
  std::string golden5 = readDataFile("goldens/sparql_first_rewrite.golden.xq");
  CHECK(serialize(parseFlwr(golden5)) == golden5);
  std::string golden6 = readDataFile("goldens/xquery_first_rewrite.golden.rq");
  CHECK(serialize(parseExtendedQuery(golden6)) == golden6);
}

TEST_CASE("decompose splits the hybrid query") {
  ExtendedQuery q = parseExtendedQuery(readDataFile("queries/country_safety.rq"));
  DecomposedQuery d = decompose(q);
  CHECK(d.linkVariable == Variable{"doc"});
  CHECK(d.sparqlInstance.where.xqueryFilters.empty());
  CHECK(serialize(d.sparqlInstance).find("XQueryFILTER") == std::string::npos);
  CHECK(freeVariables(d.sparqlInstance.where).count(d.linkVariable) == 1);
  CHECK(sparqlVariables(d.xqueryInstance) ==
        std::set<Variable>{Variable{"doc"}});
}

TEST_CASE("decompose requires an XQueryFILTER clause") {
  ExtendedQuery q = parseExtendedQuery("SELECT ?s WHERE { ?s ?p ?o . }");
  try {
    decompose(q);
    FAIL("expected NoXQueryFilter");
  } catch (const MediatorError& e) {
    CHECK(e.code() == ErrorCode::NoXQueryFilter);
  }
}

TEST_CASE("decompose then re-attach round-trips to the canonical original") {
  ExtendedQuery q = parseExtendedQuery(readDataFile("queries/country_safety.rq"));
  DecomposedQuery d = decompose(q);
  ExtendedQuery rebuilt = d.sparqlInstance;
  rebuilt.where.xqueryFilters.push_back(
      XQueryFilterClause{d.xqueryInstance, d.linkVariable});
  CHECK(serialize(rebuilt) == serialize(q));
}

TEST_CASE("canonical serialization is idempotent on the corpus") {
  for (const char* file : {"queries/population_service.rq", "queries/country_safety.rq",
                           "queries/union_pushdown.rq", "queries/safety_selected.rq"}) {
    std::string text = readDataFile(file);
    std::string once = serialize(parseExtendedQuery(text));
    CHECK(serialize(parseExtendedQuery(once)) == once);
  }
  for (const char* file : {"queries/mail_search.xq", "queries/collection_scan.xq",
                           "queries/enumerated_tuples.xq"}) {
    std::string text = readDataFile(file);
    std::string once = serialize(parseFlwr(text));
    CHECK(serialize(parseFlwr(once)) == once);
  }
}

TEST_CASE("every corpus query round-trips to an equal AST") {
  for (const char* file : {"queries/population_service.rq", "queries/country_safety.rq",
                           "queries/union_pushdown.rq", "queries/safety_selected.rq"}) {
    ExtendedQuery q = parseExtendedQuery(readDataFile(file));
    CHECK(parseExtendedQuery(serialize(q)) == q);
  }
  for (const char* file : {"queries/mail_search.xq", "queries/collection_scan.xq",
                           "queries/enumerated_tuples.xq"}) {
    FlwrQuery q = parseFlwr(readDataFile(file));
    CHECK(parseFlwr(serialize(q)) == q);
  }
}

TEST_CASE("randomized ASTs round-trip byte-equal through the serializer") {
  std::mt19937_64 rng(1234);
  testing::AstGen gen(rng);
  for (int i = 0; i < 200; ++i) {
    FlwrQuery q = gen.flwr();
    std::string text = serialize(q);
    FlwrQuery back = parseFlwr(text);
    CHECK(back == q);
    CHECK(serialize(back) == text);
  }
  for (int i = 0; i < 200; ++i) {
    ExtendedQuery q = gen.query();
    std::string text = serialize(q);
    ExtendedQuery back = parseExtendedQuery(text);
    CHECK(back == q);
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("numeric separators are normalized") {
  ExtendedQuery q = parseExtendedQuery(
      "SELECT ?x WHERE { ?x ex:p ?pop . FILTER ( ?pop > 10,000,000 ) . }");
  CHECK(serialize(q).find("10000000") != std::string::npos);
}

TEST_CASE("PREFIX declarations extend the configured map") {
  ExtendedQuery q = parseExtendedQuery(
      "PREFIX foo: <http://foo.test/>\nSELECT ?s WHERE { ?s foo:bar ?o . }");
  const RdfTerm& p = std::get<RdfTerm>(q.where.triples[0].predicate);
  CHECK(p.lexical == "http://foo.test/bar");
}

TEST_CASE("unknown prefixes are reported") {
  CHECK_THROWS_AS(parseExtendedQuery("SELECT ?s WHERE { ?s nope:p ?o . }"),
                  ParseError);
}

TEST_CASE("filters over unbound variables are rejected") {
  CHECK_THROWS_AS(parseExtendedQuery(
                      "SELECT ?s WHERE { ?s ex:p ?o . FILTER ( ?ghost > 1 ) . }"),
                  ParseError);
  // bound through a nested service pattern is fine
  parseExtendedQuery(
      "SELECT ?s WHERE { ?s ex:p ?o . "
      "SERVICE <http://r/sparql> { ?o ex:q ?v . } FILTER ( ?v > 1 ) . }");
}

TEST_CASE("count probe form parses and serializes") {
  ExtendedQuery q = parseExtendedQuery(
      "SELECT ( COUNT(*) AS ?c )\nWHERE { ?s ?p ?o . }");
  CHECK(q.countProbe);
  CHECK(q.selectVars == std::vector<Variable>{Variable{"c"}});
  CHECK(serialize(q) == "SELECT ( COUNT(*) AS ?c )\nWHERE {\n?s ?p ?o .\n}\n");
}

TEST_CASE("count-wrapped FLWR probe parses") {
  FlwrQuery q = parseFlwr("count(\nFOR $d in collection('c')\nRETURN base-uri($d)\n)");
  CHECK(q.countWrapped);
  CHECK(serialize(q).rfind("count(", 0) == 0);
}
