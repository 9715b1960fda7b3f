#include "xqfed/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xqfed/errors.hpp"
#include "xqfed/http_backends.hpp"
#include "xqfed/mock_backends.hpp"
#include "xqfed/triple_store.hpp"
#include "xqfed/xml_dom.hpp"

namespace xqfed {

namespace {

using nlohmann::json;

[[noreturn]] void configError(const std::string& what) {
  throw MediatorError(ErrorCode::ConfigError, Stage::Config, what);
}

BackendConfig::Kind kindFromString(const std::string& s) {
  if (s == "sparql-http") return BackendConfig::Kind::SparqlHttp;
  if (s == "xml-http") return BackendConfig::Kind::XmlDbHttp;
  if (s == "sparql-mock") return BackendConfig::Kind::SparqlMock;
  if (s == "xml-mock") return BackendConfig::Kind::XmlMock;
  configError("unknown backend kind '" + s + "'");
}

std::string resolvePath(const std::string& baseDir, const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  if (baseDir.empty()) return path;
  return (std::filesystem::path(baseDir) / path).string();
}

const char* envOrNull(const char* name) { return std::getenv(name); }

}  // namespace

const MediatorConfig::BackendEntry& MediatorConfig::sparqlEntry() const {
  for (const auto& e : backends)
    if (e.backend.isSparql()) return e;
  configError("config names no SPARQL backend");
}

const MediatorConfig::BackendEntry& MediatorConfig::xmlEntry() const {
  for (const auto& e : backends)
    if (!e.backend.isSparql()) return e;
  configError("config names no XML backend");
}

void MediatorConfig::validate() const {
  int nSparql = 0, nXml = 0;
  for (const auto& e : backends) {
    e.backend.validate();
    (e.backend.isSparql() ? nSparql : nXml) += 1;
  }
  if (nSparql != 1 || nXml != 1)
    configError("config must name exactly one SPARQL backend and one XML backend");
  if (chunkLimit < 1) configError("chunkLimit must be >= 1");
  if (optimizerMode == OptimizerMode::FixedPlan && !fixedPlan)
    configError("fixed-plan optimizer mode requires optimizer.fixedPlan");
}

MediatorConfig parseConfig(const std::string& jsonText,
                           const std::string& baseDir) {
  json j;
  try {
    j = json::parse(jsonText);
  } catch (const json::exception& e) {
    configError(std::string("config is not valid JSON: ") + e.what());
  }

  MediatorConfig cfg;
  if (!j.contains("backends") || !j["backends"].is_array())
    configError("config requires a 'backends' array");
  for (const auto& b : j["backends"]) {
    MediatorConfig::BackendEntry entry;
    BackendConfig& bc = entry.backend;
    if (!b.contains("id") || !b.contains("kind"))
      configError("each backend needs 'id' and 'kind'");
    bc.id = b["id"].get<std::string>();
    bc.kind = kindFromString(b["kind"].get<std::string>());
    if (b.contains("endpointUrl")) bc.endpointUrl = b["endpointUrl"].get<std::string>();
    if (b.contains("requestTimeoutMs")) bc.requestTimeoutMs = b["requestTimeoutMs"].get<double>();
    if (b.contains("retryCount")) bc.retryCount = b["retryCount"].get<int>();
    if (b.contains("authHeader")) bc.authHeader = b["authHeader"].get<std::string>();
    if (b.contains("collectionName")) bc.collectionName = b["collectionName"].get<std::string>();
    if (b.contains("xmlHttpProfile")) {
      std::string p = b["xmlHttpProfile"].get<std::string>();
      if (p == "body") bc.xmlProfile = BackendConfig::XmlHttpProfile::QueryInBody;
      else if (p == "form") bc.xmlProfile = BackendConfig::XmlHttpProfile::QueryAsFormField;
      else configError("xmlHttpProfile must be 'body' or 'form'");
    }
    if (b.contains("simulatedLatency")) {
      SimulatedLatency lat;
      lat.fixedMs = b["simulatedLatency"].value("fixedMs", 0.0);
      lat.perRowMs = b["simulatedLatency"].value("perRowMs", 0.0);
      bc.simulatedLatency = lat;
    }
    if (b.contains("fixturesFile"))
      entry.fixturesFile = resolvePath(baseDir, b["fixturesFile"].get<std::string>());
    if (b.contains("fixturesDir"))
      entry.fixturesDir = resolvePath(baseDir, b["fixturesDir"].get<std::string>());
    if (b.contains("costParams")) {
      BackendParams p;
      p.meanLatencyMs = b["costParams"].value("meanLatencyMs", 0.0);
      p.perResultCostMs = b["costParams"].value("perResultCostMs", 0.0);
      p.perDocProbeCostMs = b["costParams"].value("perDocProbeCostMs", 0.0);
      entry.costParams = p;
    }
    cfg.backends.push_back(std::move(entry));
  }

  if (j.contains("prefixes"))
    for (const auto& [prefix, iri] : j["prefixes"].items())
      cfg.prefixMap[prefix] = iri.get<std::string>();

  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    if (o.contains("mode")) {
      std::string m = o["mode"].get<std::string>();
      if (m == "history") cfg.optimizerMode = OptimizerMode::History;
      else if (m == "oracle") cfg.optimizerMode = OptimizerMode::Oracle;
      else if (m == "fixed-plan") cfg.optimizerMode = OptimizerMode::FixedPlan;
      else configError("optimizer.mode must be history, oracle or fixed-plan");
    }
    if (o.contains("fixedPlan")) {
      cfg.fixedPlan = planFromName(o["fixedPlan"].get<std::string>());
      if (!cfg.fixedPlan) configError("unknown optimizer.fixedPlan");
    }
    cfg.estimator.joinAlphaMs = o.value("joinAlphaMs", cfg.estimator.joinAlphaMs);
    cfg.estimator.branchSurchargeMs =
        o.value("branchSurchargeMs", cfg.estimator.branchSurchargeMs);
    cfg.chunkLimit = o.value("chunkLimit", cfg.chunkLimit);
    if (o.contains("defaults")) {
      const auto& d = o["defaults"];
      cfg.estimator.defaults.sparqlCardinality =
          d.value("sparqlCardinality", cfg.estimator.defaults.sparqlCardinality);
      cfg.estimator.defaults.xqueryCardinality =
          d.value("xqueryCardinality", cfg.estimator.defaults.xqueryCardinality);
      cfg.estimator.defaults.bgpTotal = d.value("bgpTotal", cfg.estimator.defaults.bgpTotal);
      cfg.estimator.defaults.docTotal = d.value("docTotal", cfg.estimator.defaults.docTotal);
    }
  }

  if (j.contains("catalogPath"))
    cfg.catalogPath = resolvePath(baseDir, j["catalogPath"].get<std::string>());
  if (j.contains("rowCap")) cfg.rowCap = j["rowCap"].get<std::size_t>();
  if (j.contains("outputFormat")) {
    std::string f = j["outputFormat"].get<std::string>();
    if (f == "json-results" || f == "json") cfg.outputFormat = OutputFormat::JsonResults;
    else if (f == "csv") cfg.outputFormat = OutputFormat::Csv;
    else if (f == "table") cfg.outputFormat = OutputFormat::Table;
    else configError("outputFormat must be json-results, csv or table");
  }
  return cfg;
}

namespace {

void applyEnvOverrides(MediatorConfig& cfg) {
  if (const char* v = envOrNull("XQFED_CATALOG_PATH")) cfg.catalogPath = v;
  if (const char* v = envOrNull("XQFED_OUTPUT_FORMAT")) {
    std::string f = v;
    if (f == "json-results" || f == "json") cfg.outputFormat = OutputFormat::JsonResults;
    else if (f == "csv") cfg.outputFormat = OutputFormat::Csv;
    else if (f == "table") cfg.outputFormat = OutputFormat::Table;
    else configError("XQFED_OUTPUT_FORMAT must be json-results, csv or table");
  }
  if (const char* v = envOrNull("XQFED_OPTIMIZER_MODE")) {
    std::string m = v;
    if (m == "history") cfg.optimizerMode = OptimizerMode::History;
    else if (m == "oracle") cfg.optimizerMode = OptimizerMode::Oracle;
    else if (m == "fixed-plan") cfg.optimizerMode = OptimizerMode::FixedPlan;
    else configError("XQFED_OPTIMIZER_MODE must be history, oracle or fixed-plan");
  }
  if (const char* v = envOrNull("XQFED_CHUNK_LIMIT"))
    cfg.chunkLimit = std::strtoull(v, nullptr, 10);
  for (auto& e : cfg.backends) {
    if (e.backend.kind == BackendConfig::Kind::SparqlHttp)
      if (const char* v = envOrNull("XQFED_SPARQL_URL")) e.backend.endpointUrl = v;
    if (e.backend.kind == BackendConfig::Kind::XmlDbHttp)
      if (const char* v = envOrNull("XQFED_XML_URL")) e.backend.endpointUrl = v;
  }
}

}  // namespace

MediatorConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) configError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string baseDir = std::filesystem::path(path).parent_path().string();
  MediatorConfig cfg = parseConfig(buf.str(), baseDir);
  applyEnvOverrides(cfg);
  cfg.validate();
  return cfg;
}

MediatorContext Mediator::context() {
  MediatorContext ctx{*sparql, *xml, catalog};
  ctx.mode = config.optimizerMode == OptimizerMode::Oracle ? EstimateMode::Oracle
                                                           : EstimateMode::History;
  ctx.estimatorCfg = config.estimator;
  ctx.execCfg.chunkLimit = config.chunkLimit;
  ctx.execCfg.rowCap = config.rowCap;
  ctx.execCfg.collectionName = xml->config().collectionName;
  ctx.execCfg.prefixes = config.prefixMap;
  return ctx;
}

void Mediator::flushCatalog() {
  auto entries = catalog.entriesSince(catalogWatermark);
  if (entries.empty()) return;
  appendCatalogFile(config.catalogPath, entries);
  catalogWatermark += entries.size();
}

Mediator buildMediator(MediatorConfig config) {
  config.validate();
  Mediator m;

  const auto& se = config.sparqlEntry();
  switch (se.backend.kind) {
    case BackendConfig::Kind::SparqlHttp:
      m.sparql = std::make_unique<HttpSparqlBackend>(se.backend);
      break;
    case BackendConfig::Kind::SparqlMock: {
      TripleStore store;
      if (!se.fixturesFile.empty()) store = TripleStore::loadFile(se.fixturesFile);
      m.sparql = std::make_unique<MockSparqlBackend>(se.backend, std::move(store),
                                                     config.prefixMap);
      break;
    }
    default:
      configError("backend '" + se.backend.id + "' is not a SPARQL kind");
  }

  const auto& xe = config.xmlEntry();
  switch (xe.backend.kind) {
    case BackendConfig::Kind::XmlDbHttp:
      m.xml = std::make_unique<HttpXmlBackend>(xe.backend);
      break;
    case BackendConfig::Kind::XmlMock: {
      XmlDocStore docs;
      if (!xe.fixturesDir.empty()) docs = XmlDocStore::loadDirectory(xe.fixturesDir);
      m.xml = std::make_unique<MockXmlBackend>(xe.backend, std::move(docs));
      break;
    }
    default:
      configError("backend '" + xe.backend.id + "' is not an XML kind");
  }

  // per-backend cost parameters for the optimizer: explicit costParams win;
  // otherwise derived from simulated latencies for mocks (SPARQL charges per
  // result row, XML per document evaluated)
  BackendParams sp;
  if (auto lat = se.backend.simulatedLatency) {
    sp.meanLatencyMs = lat->fixedMs;
    sp.perResultCostMs = lat->perRowMs;
  }
  if (se.costParams) sp = *se.costParams;
  BackendParams xp;
  if (auto lat = xe.backend.simulatedLatency) {
    xp.meanLatencyMs = lat->fixedMs;
    xp.perDocProbeCostMs = lat->perRowMs;
  }
  if (xe.costParams) xp = *xe.costParams;
  m.catalog.setBackendParams(se.backend.id, sp);
  m.catalog.setBackendParams(xe.backend.id, xp);

  loadCatalog(m.catalog, config.catalogPath);
  m.catalogWatermark = m.catalog.historySize();
  m.config = std::move(config);
  return m;
}

}  // namespace xqfed
