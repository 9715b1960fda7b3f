#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xqfed/backend.hpp"
#include "xqfed/binding_table.hpp"
#include "xqfed/catalog.hpp"
#include "xqfed/estimator.hpp"
#include "xqfed/parser.hpp"
#include "xqfed/rewrite.hpp"

namespace xqfed {

/// Build/probe hash join: retains left rows whose key term's lexical form is
/// in the document-id set; preserves row order and multiplicity.
BindingTable hashJoin(const BindingTable& left,
                      const std::set<DocumentId>& rightDocIds,
                      const Variable& key);

/// Parses <tuple><doc>..</doc><bool>..</bool></tuple> result items. Boolean
/// lexicals accepted: true/false (case-insensitive), 1/0.
XQueryTupleResult parseTupleResult(const XmlResultSequence& items);

struct ExecutorConfig {
  std::size_t chunkLimit = 500;
  std::size_t rowCap = 1'000'000;
  std::string collectionName;
  PrefixMap prefixes = defaultPrefixes();
};

struct PhaseTimes {
  double sparqlMs = 0;
  double xqueryMs = 0;
  double joinMs = 0;
  double totalMs = 0;
};

/// One backend dispatch, for catalog observations and explain output.
struct DispatchRecord {
  std::string backendId;
  std::string queryText;
  bool isSparql = false;
  double cardinality = 0;
  double elapsedMs = 0;
};

/// Executes decomposed queries under one of the three plans. Not reentrant:
/// each concurrent run needs its own Executor (phase trace is per-instance);
/// the backends themselves may be shared.
class Executor {
public:
  Executor(SparqlBackend& sparql, XmlBackend& xml, ExecutorConfig cfg);

  BindingTable execute(PlanKind plan, const DecomposedQuery& d);

  BindingTable executeParallel(const DecomposedQuery& d);
  BindingTable executeSparqlFirst(const DecomposedQuery& d);
  BindingTable executeXqueryFirst(const DecomposedQuery& d);

  /// Plain SPARQL execution (queries without XQueryFILTER).
  BindingTable passthrough(const ExtendedQuery& q);

  const PhaseTimes& phases() const { return phases_; }
  const std::vector<DispatchRecord>& dispatches() const { return dispatches_; }

private:
  BindingTable dispatchSparql(const std::string& text, CancelToken cancel = {});
  XmlResultSequence dispatchXquery(const std::string& text,
                                   CancelToken cancel = {});
  std::vector<DocumentId> distinctDocIds(const BindingTable& table,
                                         const Variable& key) const;
  void checkRowCap(std::size_t n) const;

  SparqlBackend& sparql_;
  XmlBackend& xml_;
  ExecutorConfig cfg_;
  PhaseTimes phases_;
  std::vector<DispatchRecord> dispatches_;
};

/// Report of one mediated run: chosen plan, modeled costs, rewritten texts
/// and per-phase wall times.
struct ExplainReport {
  bool passthrough = false;
  PlanKind chosenPlan = PlanKind::Parallel;
  bool overridden = false;
  bool estimated = false;  // estimate/costs fields are meaningful
  CostEstimate estimate;
  PlanCosts costs;
  std::string sparqlText;
  std::optional<std::string> xqueryText;
  bool executed = false;
  PhaseTimes phases;
  std::size_t resultRows = 0;

  std::string toText() const;
};

/// Rewritten query texts for a plan, independent of execution. Pushdown
/// texts need docIds; absent ids leave the dependent text unset.
RewrittenPlanQueries buildPlanQueries(
    const DecomposedQuery& d, PlanKind plan, const std::string& collectionName,
    const PrefixMap& prefixes,
    const std::optional<std::vector<DocumentId>>& docIds);

struct MediatorContext {
  SparqlBackend& sparql;
  XmlBackend& xml;
  CatalogStats& catalog;
  EstimateMode mode = EstimateMode::History;
  std::optional<CostEstimate> fixedEstimate;
  EstimatorConfig estimatorCfg;
  ExecutorConfig execCfg;
  bool recordObservations = true;
};

struct RunOutcome {
  BindingTable table;
  ExplainReport report;
};

/// Full pipeline: parse, decompose, estimate, choose (or override), execute,
/// record observations. Plain SPARQL queries pass through to the SPARQL
/// backend only.
RunOutcome run(const std::string& queryText, MediatorContext& ctx,
               std::optional<PlanKind> planOverride = std::nullopt);

}  // namespace xqfed
