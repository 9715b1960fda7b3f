#pragma once

#include "xqfed/rewrite.hpp"

namespace xqfed {

/// All symbols of the three-plan cost model for one query: solo processing
/// costs, join costs and selectivity ratios. Costs are estimated milliseconds
/// end-to-end per backend request.
struct CostEstimate {
  double cSparql = 0;          // C_SPARQL
  double cXquery = 0;          // C_XQuery
  double cJoinParallel = 0;    // C_Join(p)
  double cJoinSparqlFirst = 0; // C_Join(s)
  double rhoSparql = 0;        // rho_SPARQL in [0,1]
  double rhoXquery = 0;        // rho_XQuery in [0,1]

  bool operator==(const CostEstimate&) const = default;
};

struct PlanCosts {
  double parallel = 0;
  double sparqlFirst = 0;
  double xqueryFirst = 0;

  bool operator==(const PlanCosts&) const = default;
};

/// Evaluates the three plan-cost equations:
///   parallel    = max(cSparql, cXquery) + cJoinParallel
///   sparqlFirst = cSparql + rhoSparql * cXquery + cJoinSparqlFirst
///   xqueryFirst = cXquery + rhoXquery * cSparql
/// Throws MediatorError{InvalidEstimate} on negative costs or out-of-range
/// ratios.
PlanCosts computePlanCosts(const CostEstimate& e);

/// Optional extension beyond the base model: charges the XQuery-first plan
/// for endpoint-side UNION evaluation, perBranchMs per pushed-down document.
/// perBranchMs = 0 leaves the base equations untouched.
PlanCosts applyBranchSurcharge(PlanCosts costs, double perBranchMs,
                               double branchCount);

/// Plan with the least cost. Ties within relative epsilon 1e-9 break
/// deterministically: SparqlFirst, then XqueryFirst, then Parallel.
PlanKind choosePlan(const PlanCosts& costs);

}  // namespace xqfed
