#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "xqfed/backend.hpp"
#include "xqfed/catalog.hpp"
#include "xqfed/cost.hpp"
#include "xqfed/parser.hpp"

namespace xqfed {

enum class EstimateMode { History, Oracle };

/// Fallbacks used by History mode when a fingerprint has no recorded
/// observations. Negative values mean "not configured".
struct EstimatorDefaults {
  double sparqlCardinality = -1;
  double xqueryCardinality = -1;
  double bgpTotal = -1;   // rho_SPARQL denominator
  double docTotal = -1;   // rho_XQuery denominator
};

struct EstimatorConfig {
  double joinAlphaMs = 0.001;
  double branchSurchargeMs = 0;  // extension beyond the base model; 0 = off
  EstimatorDefaults defaults;
};

/// Builds CostEstimates for a decomposed query. History mode reads the
/// catalog by canonical-text fingerprint; Oracle mode issues COUNT-rewritten
/// probes against the backends (cached per fingerprint for the lifetime of
/// this estimator).
class Estimator {
public:
  Estimator(const CatalogStats& stats, SparqlBackend* sparql, XmlBackend* xml,
            std::string collectionName, PrefixMap prefixes, EstimatorConfig cfg);

  CostEstimate estimate(const DecomposedQuery& d, EstimateMode mode);

  struct Detail {
    CostEstimate estimate;
    PlanCosts costs;           // Eqs. plus optional branch surcharge
    double branchCount = 0;    // estimated pushed-down document count
  };
  Detail estimateWithCosts(const DecomposedQuery& d, EstimateMode mode);

  /// Plan costs for an externally supplied estimate (CLI fixed mode).
  Detail costsForFixed(const CostEstimate& e) const;

private:
  double probeSparqlCount(const ExtendedQuery& probe);
  double probeXqueryCount(const FlwrQuery& probe);
  CostEstimate estimateOracle(const DecomposedQuery& d, double& branchCount);
  CostEstimate estimateHistory(const DecomposedQuery& d, double& branchCount);

  const CatalogStats& stats_;
  SparqlBackend* sparql_;
  XmlBackend* xml_;
  std::string collectionName_;
  PrefixMap prefixes_;
  EstimatorConfig cfg_;
  std::map<std::uint64_t, double> probeCache_;
  std::optional<double> docCountCache_;
};

/// Copy of the query with every FILTER removed at all nesting levels (the
/// unfiltered-BGP cardinality probe target).
ExtendedQuery stripFilters(const ExtendedQuery& q);

}  // namespace xqfed
