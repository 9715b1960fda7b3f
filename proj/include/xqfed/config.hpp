#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xqfed/backend.hpp"
#include "xqfed/estimator.hpp"
#include "xqfed/executor.hpp"
#include "xqfed/parser.hpp"
#include "xqfed/rewrite.hpp"

namespace xqfed {

enum class OutputFormat { JsonResults, Csv, Table };

enum class OptimizerMode { History, Oracle, FixedPlan };

struct MediatorConfig {
  struct BackendEntry {
    BackendConfig backend;
    std::string fixturesFile;  // sparql-mock: triples file
    std::string fixturesDir;   // xml-mock: document directory
    std::optional<BackendParams> costParams;  // optimizer parameters
  };

  std::vector<BackendEntry> backends;  // exactly one SPARQL and one XML kind
  PrefixMap prefixMap = defaultPrefixes();
  OptimizerMode optimizerMode = OptimizerMode::History;
  std::optional<PlanKind> fixedPlan;  // FixedPlan mode
  EstimatorConfig estimator;
  std::size_t chunkLimit = 500;
  std::size_t rowCap = 1'000'000;
  std::string catalogPath = "xqfed_catalog.tsv";
  OutputFormat outputFormat = OutputFormat::JsonResults;

  const BackendEntry& sparqlEntry() const;
  const BackendEntry& xmlEntry() const;
  void validate() const;
};

/// Loads the JSON config file and applies XQFED_* environment overrides
/// (XQFED_CATALOG_PATH, XQFED_OUTPUT_FORMAT, XQFED_OPTIMIZER_MODE,
/// XQFED_SPARQL_URL, XQFED_XML_URL, XQFED_CHUNK_LIMIT).
MediatorConfig loadConfig(const std::string& path);

MediatorConfig parseConfig(const std::string& jsonText,
                           const std::string& baseDir);

/// Instantiated backends plus catalog, ready to execute queries.
struct Mediator {
  MediatorConfig config;
  std::unique_ptr<SparqlBackend> sparql;
  std::unique_ptr<XmlBackend> xml;
  CatalogStats catalog;
  std::size_t catalogWatermark = 0;  // entries already persisted

  MediatorContext context();

  /// Appends observations recorded since the last flush to the catalog file.
  void flushCatalog();
};

Mediator buildMediator(MediatorConfig config);

}  // namespace xqfed
