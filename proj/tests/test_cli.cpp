#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "xqfed/cli.hpp"
#include "xqfed/serialize.hpp"

using namespace xqfed;
namespace fs = std::filesystem;

namespace {

std::string readDataFile(const std::string& rel) {
  std::ifstream in(std::string(XQFED_TEST_DATA_DIR) + "/" + rel);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Temporary workspace with mock fixtures, a config file and a query.
struct CliFixture {
  fs::path dir;

  CliFixture() {
    dir = fs::temp_directory_path() /
          fs::path("xqfed_cli_" + std::to_string(::getpid()) + "_" +
                   std::to_string(counter()++));
    fs::create_directories(dir / "docs");

    std::ofstream triples(dir / "triples.nq");
    triples
        << "<http://example.org/jp> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/Country> .\n"
        << "<http://example.org/is> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/Country> .\n"
        << "<http://example.org/de> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/Country> .\n"
        << "<http://example.org/jp> <http://example.org/safetyInfo> \"0001.xml\" .\n"
        << "<http://example.org/is> <http://example.org/safetyInfo> \"0002.xml\" .\n"
        << "<http://example.org/de> <http://example.org/safetyInfo> \"0003.xml\" .\n"
        << "<http://example.org/jp> <http://www.w3.org/2002/07/owl#sameAs> <http://dbpedia.org/resource/jp> .\n"
        << "<http://example.org/is> <http://www.w3.org/2002/07/owl#sameAs> <http://dbpedia.org/resource/is> .\n"
        << "<http://example.org/de> <http://www.w3.org/2002/07/owl#sameAs> <http://dbpedia.org/resource/de> .\n"
        << "<http://dbpedia.org/resource/jp> <http://dbpedia.org/ontology/populationTotal> 125000000 <http://dbpedia.org/sparql> .\n"
        << "<http://dbpedia.org/resource/is> <http://dbpedia.org/ontology/populationTotal> 360000 <http://dbpedia.org/sparql> .\n"
        << "<http://dbpedia.org/resource/de> <http://dbpedia.org/ontology/populationTotal> 83000000 <http://dbpedia.org/sparql> .\n";
    triples.close();

    writeDoc("0001.xml", "2020-04-01", "coronavirus alert");
    writeDoc("0002.xml", "2020-05-01", "coronavirus alert");
    writeDoc("0003.xml", "2020-01-01", "coronavirus alert");

    std::ofstream config(dir / "config.json");
    config << R"({
  "backends": [
    {"id": "rdf", "kind": "sparql-mock", "fixturesFile": "triples.nq"},
    {"id": "xmldb", "kind": "xml-mock", "collectionName": "safety_info",
     "fixturesDir": "docs"}
  ],
  "optimizer": {"mode": "oracle"},
  "catalogPath": "catalog.tsv",
  "outputFormat": "json-results"
})";
    config.close();

    std::ofstream query(dir / "query.rq");
    query << readDataFile("queries/country_safety.rq");
    query.close();
  }

  ~CliFixture() { fs::remove_all(dir); }

  void writeDoc(const std::string& id, const std::string& date,
                const std::string& body) {
    std::ofstream doc(dir / "docs" / id);
    doc << "<country><mail><leaveDate>" << date << "</leaveDate><body>" << body
        << "</body></mail></country>";
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  static int& counter() {
    static int c = 0;
    return c;
  }
};

struct CapturedOutput {
  std::ostringstream out, err;
  std::streambuf* oldOut;
  std::streambuf* oldErr;

  CapturedOutput() {
    oldOut = std::cout.rdbuf(out.rdbuf());
    oldErr = std::cerr.rdbuf(err.rdbuf());
  }
  ~CapturedOutput() {
    std::cout.rdbuf(oldOut);
    std::cerr.rdbuf(oldErr);
  }
};

}  // namespace

TEST_CASE("formatResults emits byte-stable SPARQL JSON results") {
  BindingTable t;
  t.variables = {Variable{"s"}, Variable{"doc"}};
  t.addRow({RdfTerm::iri("http://example.org/jp"), RdfTerm::literal("0001.xml")});
  std::string json = formatResults(t, OutputFormat::JsonResults, defaultPrefixes());
  std::string expected = R"({
  "head": {
    "vars": [
      "s",
      "doc"
    ]
  },
  "results": {
    "bindings": [
      {
        "s": {
          "type": "uri",
          "value": "http://example.org/jp"
        },
        "doc": {
          "type": "literal",
          "value": "0001.xml"
        }
      }
    ]
  }
}
)";
  CHECK(json == expected);
  CHECK(formatResults(t, OutputFormat::JsonResults, defaultPrefixes()) == json);
}

TEST_CASE("formatResults csv and table forms") {
  BindingTable t;
  t.variables = {Variable{"a"}, Variable{"b"}};
  t.addRow({RdfTerm::literal("x,y"), RdfTerm::integer(7)});
  std::string csv = formatResults(t, OutputFormat::Csv, defaultPrefixes());
  CHECK(csv == "a,b\n\"x,y\",7\n");
  std::string table = formatResults(t, OutputFormat::Table, defaultPrefixes());
  CHECK(table.find("?a") != std::string::npos);
  CHECK(table.find("7") != std::string::npos);
}

TEST_CASE("cli run executes a hybrid query end to end") {
  CliFixture fx;
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("query.rq"), "-c", fx.path("config.json"),
                    "--plan", "auto", "--explain"});
  REQUIRE(rc == 0);
  std::string out = cap.out.str();
  // jp and de have both population over ten million and an April/May notice
  CHECK(out.find("http://example.org/jp") != std::string::npos);
  CHECK(out.find("http://example.org/de") == std::string::npos);  // January mail
  CHECK(out.find("http://example.org/is") == std::string::npos);  // small pop
  CHECK(cap.err.str().find("plan:") != std::string::npos);
  // observations were appended
  std::ifstream catalog(fx.path("catalog.tsv"));
  std::string line;
  int lines = 0;
  while (std::getline(catalog, line)) ++lines;
  CHECK(lines >= 2);
}

TEST_CASE("cli run on plain SPARQL matches a direct backend call") {
  CliFixture fx;
  std::ofstream query(fx.dir / "plain.rq");
  query << "SELECT ?s ?doc WHERE { ?s ex:safetyInfo ?doc . }";
  query.close();
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("plain.rq"), "-c", fx.path("config.json"),
                    "--format", "csv"});
  REQUIRE(rc == 0);
  std::string out = cap.out.str();
  CHECK(out.rfind("s,doc\n", 0) == 0);
  CHECK(out.find("0001.xml") != std::string::npos);
  CHECK(out.find("0002.xml") != std::string::npos);
  CHECK(out.find("0003.xml") != std::string::npos);
}

TEST_CASE("cli maps malformed queries to exit code 2 with a position") {
  CliFixture fx;
  std::ofstream query(fx.dir / "bad.rq");
  query << "SELECT ?s WHERE { ?s ex:p }";
  query.close();
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("bad.rq"), "-c", fx.path("config.json")});
  CHECK(rc == 2);
  CHECK(cap.err.str().find("1:") != std::string::npos);
}

TEST_CASE("cli maps config errors to exit code 1") {
  CliFixture fx;
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("query.rq"), "-c", fx.path("nope.json")});
  CHECK(rc == 1);
}

TEST_CASE("cli maps estimation failures to exit code 3") {
  CliFixture fx;
  std::ofstream config(fx.dir / "nostats.json");
  config << R"({
  "backends": [
    {"id": "rdf", "kind": "sparql-mock", "fixturesFile": "triples.nq"},
    {"id": "xmldb", "kind": "xml-mock", "collectionName": "safety_info",
     "fixturesDir": "docs"}
  ],
  "optimizer": {"mode": "history"},
  "catalogPath": "empty_catalog.tsv"
})";
  config.close();
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("query.rq"), "-c", fx.path("nostats.json")});
  CHECK(rc == 3);  // empty catalog, no defaults configured
  CHECK(cap.err.str().find("NoStatsAvailable") != std::string::npos);
}

TEST_CASE("cli maps backend failures to exit code 4") {
  CliFixture fx;
  std::ofstream config(fx.dir / "dead.json");
  config << R"({
  "backends": [
    {"id": "rdf", "kind": "sparql-mock", "fixturesFile": "triples.nq"},
    {"id": "xmldb", "kind": "xml-http", "collectionName": "safety_info",
     "endpointUrl": "http://127.0.0.1:9/db", "requestTimeoutMs": 200}
  ],
  "catalogPath": "catalog2.tsv"
})";
  config.close();
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("query.rq"), "-c", fx.path("dead.json"),
                    "--plan", "xquery-first"});
  CHECK(rc == 4);
}

TEST_CASE("explain with fixed estimates prints the worked example") {
  CliFixture fx;
  CapturedOutput cap;
  int rc = cliMain({"explain", "-q", fx.path("query.rq"), "-c",
                    fx.path("config.json"), "--estimate",
                    "fixed:10,100,1,0.5,0.05,0.5", "--doc-ids",
                    "0001.xml,0002.xml"});
  REQUIRE(rc == 0);
  std::string out = cap.out.str();
  CHECK(out.find("parallel=101.000") != std::string::npos);
  CHECK(out.find("sparql-first=15.500") != std::string::npos);
  CHECK(out.find("xquery-first=105.000") != std::string::npos);
  CHECK(out.find("plan: sparql-first") != std::string::npos);
}

TEST_CASE("explain --plan parallel includes the canonical parallel rewrite") {
  CliFixture fx;
  CapturedOutput cap;
  int rc = cliMain({"explain", "-q", fx.path("query.rq"), "-c",
                    fx.path("config.json"), "--plan", "parallel", "--estimate",
                    "fixed:10,100,1,0.5,0.05,0.5"});
  REQUIRE(rc == 0);
  CHECK(cap.out.str().find(readDataFile("goldens/parallel_rewrite.golden.xq")) !=
        std::string::npos);
}

TEST_CASE("explain --plan xquery-first --doc-ids includes the UNION rewrite") {
  CliFixture fx;
  CapturedOutput cap;
  int rc = cliMain({"explain", "-q", fx.path("query.rq"), "-c",
                    fx.path("config.json"), "--plan", "xquery-first",
                    "--doc-ids", "0001.xml,0002.xml", "--estimate",
                    "fixed:10,100,1,0.5,0.05,0.5"});
  REQUIRE(rc == 0);
  CHECK(cap.out.str().find(readDataFile("goldens/xquery_first_rewrite.golden.rq")) !=
        std::string::npos);
}

TEST_CASE("explain never mutates the catalog") {
  CliFixture fx;
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"run", "-q", fx.path("query.rq"), "-c",
                     fx.path("config.json")}) == 0);
  }
  auto catalogBytes = [&] {
    std::ifstream in(fx.path("catalog.tsv"));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  std::string before = catalogBytes();
  CHECK_FALSE(before.empty());
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"explain", "-q", fx.path("query.rq"), "-c",
                     fx.path("config.json"), "--estimate", "oracle"}) == 0);
  }
  CHECK(catalogBytes() == before);
}

TEST_CASE("explain json is machine readable and stable") {
  CliFixture fx;
  std::string first, second;
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"explain", "-q", fx.path("query.rq"), "-c",
                     fx.path("config.json"), "--estimate",
                     "fixed:10,100,1,0.5,0.05,0.5", "--format", "json",
                     "--doc-ids", "0001.xml"}) == 0);
    first = cap.out.str();
  }
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"explain", "-q", fx.path("query.rq"), "-c",
                     fx.path("config.json"), "--estimate",
                     "fixed:10,100,1,0.5,0.05,0.5", "--format", "json",
                     "--doc-ids", "0001.xml"}) == 0);
    second = cap.out.str();
  }
  CHECK(first == second);
  CHECK(first.find("\"chosen\": \"sparql-first\"") != std::string::npos);
  CHECK(first.find("\"costs\"") != std::string::npos);
}

TEST_CASE("plan override flows through run") {
  CliFixture fx;
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("query.rq"), "-c", fx.path("config.json"),
                    "--plan", "parallel", "--explain"});
  REQUIRE(rc == 0);
  CHECK(cap.err.str().find("plan: parallel (overridden)") != std::string::npos);
}

TEST_CASE("environment variables override the config file") {
  CliFixture fx;
  ::setenv("XQFED_OUTPUT_FORMAT", "csv", 1);
  CapturedOutput cap;
  int rc = cliMain({"run", "-q", fx.path("query.rq"), "-c", fx.path("config.json")});
  ::unsetenv("XQFED_OUTPUT_FORMAT");
  REQUIRE(rc == 0);
  CHECK(cap.out.str().rfind("s\n", 0) == 0);  // csv header, not JSON
}

TEST_CASE("catalog show and clear") {
  CliFixture fx;
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"run", "-q", fx.path("query.rq"), "-c",
                     fx.path("config.json")}) == 0);
  }
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"catalog", "show", "-c", fx.path("config.json")}) == 0);
    CHECK_FALSE(cap.out.str().empty());
  }
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"catalog", "clear", "-c", fx.path("config.json")}) == 0);
  }
  {
    CapturedOutput cap;
    REQUIRE(cliMain({"catalog", "show", "-c", fx.path("config.json")}) == 0);
    CHECK(cap.out.str().empty());
  }
}
