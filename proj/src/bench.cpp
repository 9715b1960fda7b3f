#include "xqfed/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "xqfed/errors.hpp"
#include "xqfed/estimator.hpp"
#include "xqfed/executor.hpp"

namespace xqfed {

namespace {

constexpr const char* kCollection = "safety_info";
constexpr const char* kEntityNs = "http://example.org/";
constexpr const char* kPopulationIri = "http://dbpedia.org/ontology/populationTotal";
constexpr const char* kSafetyInfoIri = "http://example.org/safetyInfo";
constexpr const char* kServiceIri = "http://dbpedia.org/sparql";

std::string docIdFor(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d%05d.xml", i);
  return buf;
}

std::string isoDate(int dayOffset) {
  std::chrono::year_month_day base{std::chrono::year{2020}, std::chrono::month{1},
                                   std::chrono::day{1}};
  std::chrono::sys_days days{base};
  days += std::chrono::days{dayOffset};
  std::chrono::year_month_day ymd{days};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (docCount <= 0 || entityCount <= 0)
    throw MediatorError(ErrorCode::InfeasibleGrid, Stage::Config,
                        "scenario needs positive docCount and entityCount");
  if (sparqlSelectivityGrid.empty() || xquerySelectivityGrid.empty())
    throw MediatorError(ErrorCode::InfeasibleGrid, Stage::Config,
                        "selectivity grids must be non-empty");
  for (int k : sparqlSelectivityGrid)
    if (k < 0 || k > entityCount)
      throw MediatorError(ErrorCode::InfeasibleGrid, Stage::Config,
                          "SPARQL selectivity target " + std::to_string(k) +
                              " exceeds entity count");
  for (int m : xquerySelectivityGrid)
    if (m < 0 || m > docCount)
      throw MediatorError(ErrorCode::InfeasibleGrid, Stage::Config,
                          "XQuery selectivity target " + std::to_string(m) +
                              " exceeds document count");
}

ScenarioSpec csScenario() {
  ScenarioSpec s;
  s.name = "cs";
  s.docCount = 200;
  s.entityCount = 200;
  s.sparqlLatency = {120.0, 0.2};  // remote endpoint behind SERVICE: slow
  s.xmlLatency = {1.0, 0.008};     // small local collection: fast
  s.sparqlSelectivityGrid = {40, 80, 120, 160};
  s.xquerySelectivityGrid = {2, 20, 60};
  s.seed = 7;
  return s;
}

ScenarioSpec lsScenario() {
  ScenarioSpec s;
  s.name = "ls";
  s.docCount = 2000;
  s.entityCount = 2000;
  s.sparqlLatency = {2.0, 0.05};
  s.xmlLatency = {2.0, 0.05};  // comparable backends
  s.sparqlSelectivityGrid = {100, 600, 1200, 1800};
  s.xquerySelectivityGrid = {20, 200, 660};
  s.seed = 7;
  return s;
}

ScenarioSpec dsScenario() {
  ScenarioSpec s;
  s.name = "ds";
  s.docCount = 20000;    // scans dominate the XML side
  s.entityCount = 4000;  // the LOD side is far smaller than the document side
  s.sparqlLatency = {1.0, 0.01};  // local endpoint: fast
  s.xmlLatency = {2.0, 0.01};     // large collection: slow scans
  s.sparqlSelectivityGrid = {100, 500, 1000, 2000};
  s.xquerySelectivityGrid = {10, 100, 1000};
  s.seed = 7;
  return s;
}

std::string GeneratedScenario::popThreshold(int sparqlSel) const {
  // populations are exactly {1000, 2000, ..., 1000*entityCount}; a threshold
  // of 1000*(entityCount-k) admits exactly the k largest
  return std::to_string(1000LL * (entityCount - sparqlSel));
}

std::string GeneratedScenario::dateThreshold(int xquerySel) const {
  // document dates are base+0 .. base+docCount-1 days; strictly-before
  // base+m matches exactly m documents
  return isoDate(xquerySel);
}

std::string GeneratedScenario::queryFor(int sparqlSel, int xquerySel) const {
  std::ostringstream q;
  q << "SELECT ?entity ?safety\n"
    << "WHERE { ?entity ex:safetyInfo ?safety .\n"
    << "SERVICE <" << kServiceIri << "> {\n"
    << "?entity dbo:populationTotal ?pop .\n"
    << "FILTER ( ?pop > " << popThreshold(sparqlSel) << " ) .\n"
    << "}\n"
    << "XQueryFILTER (\n"
    << "LET $d := doc(?safety)//mail[leaveDate < xs:date('"
    << dateThreshold(xquerySel) << "')]\n"
    << "RETURN contains($d, 'coronavirus')\n"
    << ") .\n"
    << "}\n";
  return q.str();
}

GeneratedScenario generateScenario(const ScenarioSpec& spec) {
  spec.validate();
  GeneratedScenario g;
  g.collectionName = kCollection;
  g.entityCount = spec.entityCount;
  g.docCount = spec.docCount;

  std::mt19937_64 rng(spec.seed);
  std::vector<long long> pops(spec.entityCount);
  for (int i = 0; i < spec.entityCount; ++i) pops[i] = 1000LL * (i + 1);
  std::shuffle(pops.begin(), pops.end(), rng);
  std::vector<int> dayOffsets(spec.docCount);
  for (int i = 0; i < spec.docCount; ++i) dayOffsets[i] = i;
  std::shuffle(dayOffsets.begin(), dayOffsets.end(), rng);

  for (int i = 0; i < spec.entityCount; ++i) {
    RdfTerm entity = RdfTerm::iri(kEntityNs + ("e" + std::to_string(i)));
    std::string docId = docIdFor(i % spec.docCount);
    g.triples.add("", entity, RdfTerm::iri(kSafetyInfoIri), RdfTerm::literal(docId));
    g.triples.add(kServiceIri, entity, RdfTerm::iri(kPopulationIri),
                  RdfTerm::integer(pops[i]));
  }

  for (int i = 0; i < spec.docCount; ++i) {
    XmlNode mail;
    mail.name = "mail";
    XmlNode leaveDate;
    leaveDate.name = "leaveDate";
    leaveDate.text = isoDate(dayOffsets[i]);
    XmlNode body;
    body.name = "body";
    body.text = "coronavirus guidance update " + std::to_string(i);
    mail.children.push_back(std::move(leaveDate));
    mail.children.push_back(std::move(body));
    XmlNode root;
    root.name = "country";
    root.children.push_back(std::move(mail));
    g.docs.add(docIdFor(i), std::move(root));
  }
  return g;
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n == 0) return 0;
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

std::vector<BenchRow> runBenchmark(const ScenarioSpec& spec, int repetitions) {
  if (repetitions < 1)
    throw MediatorError(ErrorCode::InfeasibleGrid, Stage::Config,
                        "repetitions must be >= 1");
  GeneratedScenario g = generateScenario(spec);

  BackendConfig scfg;
  scfg.id = "sparql";
  scfg.kind = BackendConfig::Kind::SparqlMock;
  scfg.simulatedLatency = spec.sparqlLatency;
  BackendConfig xcfg;
  xcfg.id = "xml";
  xcfg.kind = BackendConfig::Kind::XmlMock;
  xcfg.collectionName = g.collectionName;
  xcfg.simulatedLatency = spec.xmlLatency;

  MockSparqlBackend sparql(scfg, std::move(g.triples));
  MockXmlBackend xml(xcfg, std::move(g.docs));

  CatalogStats stats;
  stats.setBackendParams("sparql",
                         {spec.sparqlLatency.fixedMs, spec.sparqlLatency.perRowMs, 0});
  stats.setBackendParams("xml",
                         {spec.xmlLatency.fixedMs, 0, spec.xmlLatency.perRowMs});

  ExecutorConfig ecfg;
  ecfg.collectionName = g.collectionName;

  std::vector<BenchRow> rows;
  for (int k : spec.sparqlSelectivityGrid) {
    for (int m : spec.xquerySelectivityGrid) {
      std::string queryText = g.queryFor(k, m);
      DecomposedQuery d = decompose(parseExtendedQuery(queryText));

      Estimator estimator(stats, &sparql, &xml, g.collectionName,
                          defaultPrefixes(), EstimatorConfig{});
      PlanKind chosen =
          choosePlan(estimator.estimateWithCosts(d, EstimateMode::Oracle).costs);

      for (PlanKind plan : {PlanKind::Parallel, PlanKind::SparqlFirst,
                            PlanKind::XqueryFirst}) {
        std::vector<double> total, sparqlMs, xqueryMs, joinMs;
        for (int rep = 0; rep <= repetitions; ++rep) {
          Executor ex(sparql, xml, ecfg);
          ex.execute(plan, d);
          if (rep == 0) continue;  // warm-up discarded
          total.push_back(ex.phases().totalMs);
          sparqlMs.push_back(ex.phases().sparqlMs);
          xqueryMs.push_back(ex.phases().xqueryMs);
          joinMs.push_back(ex.phases().joinMs);
        }
        BenchRow row;
        row.scenario = spec.name;
        row.plan = plan;
        row.sparqlSel = k;
        row.xquerySel = m;
        row.medianMs = median(total);
        row.sparqlMs = median(sparqlMs);
        row.xqueryMs = median(xqueryMs);
        row.joinMs = median(joinMs);
        row.chosenByOptimizer = plan == chosen;
        row.samplesMs = total;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string benchCsv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "scenario,plan,sparql_sel,xquery_sel,median_ms,sparql_ms,xquery_ms,"
         "join_ms,chosen_by_optimizer\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.3f,%.3f,%.3f,%.3f,%s\n",
                  r.scenario.c_str(), planName(r.plan), r.sparqlSel, r.xquerySel,
                  r.medianMs, r.sparqlMs, r.xqueryMs, r.joinMs,
                  r.chosenByOptimizer ? "true" : "false");
    out << buf;
  }
  return out.str();
}

}  // namespace xqfed
