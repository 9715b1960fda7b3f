#include "xqfed/cost.hpp"

#include <algorithm>
#include <cmath>

#include "xqfed/errors.hpp"

namespace xqfed {

PlanCosts computePlanCosts(const CostEstimate& e) {
  auto bad = [](double v) { return !(v >= 0) || std::isnan(v); };
  if (bad(e.cSparql) || bad(e.cXquery) || bad(e.cJoinParallel) ||
      bad(e.cJoinSparqlFirst))
    throw MediatorError(ErrorCode::InvalidEstimate, Stage::Plan,
                        "cost estimates must be non-negative");
  if (bad(e.rhoSparql) || bad(e.rhoXquery) || e.rhoSparql > 1 || e.rhoXquery > 1)
    throw MediatorError(ErrorCode::InvalidEstimate, Stage::Plan,
                        "selectivity ratios must lie in [0,1]");
  PlanCosts c;
  c.parallel = std::max(e.cSparql, e.cXquery) + e.cJoinParallel;
  c.sparqlFirst = e.cSparql + e.rhoSparql * e.cXquery + e.cJoinSparqlFirst;
  c.xqueryFirst = e.cXquery + e.rhoXquery * e.cSparql;
  return c;
}

PlanCosts applyBranchSurcharge(PlanCosts costs, double perBranchMs,
                               double branchCount) {
  costs.xqueryFirst += perBranchMs * branchCount;
  return costs;
}

PlanKind choosePlan(const PlanCosts& costs) {
  double m = std::min({costs.parallel, costs.sparqlFirst, costs.xqueryFirst});
  auto tiedWithMin = [m](double v) {
    double scale = std::max({std::abs(v), std::abs(m), 1.0});
    return v - m <= 1e-9 * scale;
  };
  if (tiedWithMin(costs.sparqlFirst)) return PlanKind::SparqlFirst;
  if (tiedWithMin(costs.xqueryFirst)) return PlanKind::XqueryFirst;
  return PlanKind::Parallel;
}

}  // namespace xqfed
