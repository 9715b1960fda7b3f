#include "xqfed/estimator.hpp"

#include <algorithm>

#include "xqfed/errors.hpp"
#include "xqfed/rewrite.hpp"
#include "xqfed/serialize.hpp"

namespace xqfed {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void stripPatternFilters(GraphPattern& p) {
  p.filters.clear();
  for (auto& s : p.services) stripPatternFilters(s.inner);
  for (auto& u : p.unions) stripPatternFilters(u);
}

double parseCount(const std::string& lexical, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(lexical.c_str(), &end);
  if (end != lexical.c_str() + lexical.size())
    throw MediatorError(ErrorCode::BackendFailure, Stage::Backend,
                        "malformed " + what + " probe result '" + lexical + "'");
  return v;
}

}  // namespace

ExtendedQuery stripFilters(const ExtendedQuery& q) {
  ExtendedQuery out = q;
  stripPatternFilters(out.where);
  return out;
}

Estimator::Estimator(const CatalogStats& stats, SparqlBackend* sparql,
                     XmlBackend* xml, std::string collectionName,
                     PrefixMap prefixes, EstimatorConfig cfg)
    : stats_(stats),
      sparql_(sparql),
      xml_(xml),
      collectionName_(std::move(collectionName)),
      prefixes_(std::move(prefixes)),
      cfg_(cfg) {}

double Estimator::probeSparqlCount(const ExtendedQuery& probe) {
  std::string text = serialize(probe, prefixes_);
  std::uint64_t fp = fingerprint(text);
  auto it = probeCache_.find(fp);
  if (it != probeCache_.end()) return it->second;
  if (!sparql_)
    throw MediatorError(ErrorCode::NoStatsAvailable, Stage::Plan,
                        "oracle estimation requires a SPARQL backend");
  BindingTable t = sparql_->select(text);
  if (t.rows.size() != 1 || t.rows[0].size() != 1)
    throw MediatorError(ErrorCode::BackendFailure, Stage::Backend,
                        "COUNT probe returned an unexpected shape");
  double v = parseCount(t.rows[0][0].lexical, "COUNT");
  probeCache_[fp] = v;
  return v;
}

double Estimator::probeXqueryCount(const FlwrQuery& probe) {
  std::string text = serialize(probe);
  std::uint64_t fp = fingerprint(text);
  auto it = probeCache_.find(fp);
  if (it != probeCache_.end()) return it->second;
  if (!xml_)
    throw MediatorError(ErrorCode::NoStatsAvailable, Stage::Plan,
                        "oracle estimation requires an XML backend");
  XmlResultSequence seq = xml_->eval(text);
  if (seq.size() != 1)
    throw MediatorError(ErrorCode::BackendFailure, Stage::Backend,
                        "count() probe returned an unexpected shape");
  double v = parseCount(seq[0], "count()");
  probeCache_[fp] = v;
  return v;
}

CostEstimate Estimator::estimateOracle(const DecomposedQuery& d,
                                       double& branchCount) {
  auto sparqlParams = stats_.backendParams(sparql_ ? sparql_->config().id : "");
  auto xmlParams = stats_.backendParams(xml_ ? xml_->config().id : "");
  if (!sparqlParams || !xmlParams)
    throw MediatorError(ErrorCode::NoStatsAvailable, Stage::Plan,
                        "catalog lacks perBackend parameters for both backends");

  ExtendedQuery ensured = ensureLinkVarSelected(d.sparqlInstance, d.linkVariable);
  ExtendedQuery countAll = ensured;
  countAll.countProbe = true;
  countAll.selectVars = {Variable{"count"}};
  ExtendedQuery countUnfiltered = stripFilters(countAll);

  FlwrQuery xq = rewriteXqueryParallel(d.xqueryInstance, d.linkVariable,
                                       collectionName_);
  FlwrQuery countXq = xq;
  countXq.countWrapped = true;

  double nSparql = probeSparqlCount(countAll);
  double bgpTotal = probeSparqlCount(countUnfiltered);
  double nXquery = probeXqueryCount(countXq);
  if (!docCountCache_) docCountCache_ = double(xml_->countDocuments());
  double docTotal = *docCountCache_;

  CostEstimate e;
  e.cSparql = sparqlParams->meanLatencyMs + sparqlParams->perResultCostMs * nSparql;
  e.cXquery = xmlParams->meanLatencyMs + xmlParams->perDocProbeCostMs * docTotal +
              xmlParams->perResultCostMs * nXquery;
  e.rhoSparql = clamp01(nSparql / std::max(bgpTotal, 1.0));
  e.rhoXquery = clamp01(nXquery / std::max(docTotal, 1.0));
  e.cJoinParallel = cfg_.joinAlphaMs * (nSparql + nXquery);
  e.cJoinSparqlFirst = cfg_.joinAlphaMs * (nSparql + e.rhoSparql * nXquery);
  branchCount = nXquery;
  return e;
}

CostEstimate Estimator::estimateHistory(const DecomposedQuery& d,
                                        double& branchCount) {
  auto sparqlParams =
      stats_.effectiveParams(sparql_ ? sparql_->config().id : "sparql");
  auto xmlParams = stats_.effectiveParams(xml_ ? xml_->config().id : "xml");
  if (!sparqlParams || !xmlParams)
    throw MediatorError(ErrorCode::NoStatsAvailable, Stage::Plan,
                        "catalog lacks perBackend parameters for both backends");

  ExtendedQuery ensured = ensureLinkVarSelected(d.sparqlInstance, d.linkVariable);
  FlwrQuery xq = rewriteXqueryParallel(d.xqueryInstance, d.linkVariable,
                                       collectionName_);
  std::uint64_t fpS = fingerprint(serialize(ensured, prefixes_));
  std::uint64_t fpX = fingerprint(serialize(xq));

  double cSparql, cardSparql;
  if (auto agg = stats_.lookup(fpS)) {
    cSparql = agg->meanTimeMs;
    cardSparql = agg->meanCardinality;
  } else if (cfg_.defaults.sparqlCardinality >= 0) {
    cardSparql = cfg_.defaults.sparqlCardinality;
    cSparql = sparqlParams->meanLatencyMs +
              sparqlParams->perResultCostMs * cardSparql;
  } else {
    throw MediatorError(ErrorCode::NoStatsAvailable, Stage::Plan,
                        "no execution history for this SPARQL instance and no "
                        "default cardinality configured");
  }

  double cXquery, cardXquery;
  if (auto agg = stats_.lookup(fpX)) {
    cXquery = agg->meanTimeMs;
    cardXquery = agg->meanCardinality;
  } else if (cfg_.defaults.xqueryCardinality >= 0) {
    cardXquery = cfg_.defaults.xqueryCardinality;
    double docTotal = std::max(cfg_.defaults.docTotal, 0.0);
    cXquery = xmlParams->meanLatencyMs +
              xmlParams->perDocProbeCostMs * docTotal +
              xmlParams->perResultCostMs * cardXquery;
  } else {
    throw MediatorError(ErrorCode::NoStatsAvailable, Stage::Plan,
                        "no execution history for this XQuery instance and no "
                        "default cardinality configured");
  }

  double bgpTotal = cfg_.defaults.bgpTotal > 0 ? cfg_.defaults.bgpTotal
                                               : std::max(cardSparql, 1.0);
  double docTotal = cfg_.defaults.docTotal > 0 ? cfg_.defaults.docTotal
                                               : std::max(cardXquery, 1.0);

  CostEstimate e;
  e.cSparql = cSparql;
  e.cXquery = cXquery;
  e.rhoSparql = clamp01(cardSparql / bgpTotal);
  e.rhoXquery = clamp01(cardXquery / docTotal);
  e.cJoinParallel = cfg_.joinAlphaMs * (cardSparql + cardXquery);
  e.cJoinSparqlFirst = cfg_.joinAlphaMs * (cardSparql + e.rhoSparql * cardXquery);
  branchCount = cardXquery;
  return e;
}

CostEstimate Estimator::estimate(const DecomposedQuery& d, EstimateMode mode) {
  double branches = 0;
  return mode == EstimateMode::Oracle ? estimateOracle(d, branches)
                                      : estimateHistory(d, branches);
}

Estimator::Detail Estimator::estimateWithCosts(const DecomposedQuery& d,
                                               EstimateMode mode) {
  Detail detail;
  detail.estimate = mode == EstimateMode::Oracle
                        ? estimateOracle(d, detail.branchCount)
                        : estimateHistory(d, detail.branchCount);
  detail.costs = applyBranchSurcharge(computePlanCosts(detail.estimate),
                                      cfg_.branchSurchargeMs, detail.branchCount);
  return detail;
}

Estimator::Detail Estimator::costsForFixed(const CostEstimate& e) const {
  Detail detail;
  detail.estimate = e;
  detail.costs = computePlanCosts(e);
  detail.branchCount = 0;
  return detail;
}

}  // namespace xqfed
