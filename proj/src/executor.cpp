#include "xqfed/executor.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <future>
#include <unordered_map>
#include <unordered_set>

#include "xqfed/errors.hpp"
#include "xqfed/serialize.hpp"
#include "xqfed/xml_dom.hpp"

namespace xqfed {

namespace {

class Timer {
public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

BindingTable hashJoin(const BindingTable& left,
                      const std::set<DocumentId>& rightDocIds,
                      const Variable& key) {
  auto idx = left.columnIndex(key);
  if (!idx)
    throw MediatorError(ErrorCode::JoinKeyMissing, Stage::Join,
                        "join key ?" + key.name + " missing from left table");
  std::unordered_set<std::string> ids;
  ids.reserve(rightDocIds.size());
  for (const auto& d : rightDocIds) ids.insert(d.uri);
  BindingTable out;
  out.variables = left.variables;
  for (const auto& row : left.rows)
    if (ids.count(row[*idx].lexical)) out.rows.push_back(row);
  return out;
}

XQueryTupleResult parseTupleResult(const XmlResultSequence& items) {
  XQueryTupleResult result;
  // FOR-based filter bodies emit one tuple per binding, so a document may
  // appear several times; verdicts aggregate with OR, keeping entries unique
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& item : items) {
    XmlNode node;
    try {
      node = parseXml(item);
    } catch (const MediatorError&) {
      throw MediatorError(ErrorCode::MalformedTupleResult, Stage::Backend,
                          "tuple result item is not well-formed XML: " + item);
    }
    if (node.name != "tuple")
      throw MediatorError(ErrorCode::MalformedTupleResult, Stage::Backend,
                          "expected <tuple>, got <" + node.name + ">");
    const XmlNode* doc = nullptr;
    const XmlNode* boolNode = nullptr;
    for (const auto& child : node.children) {
      if (child.name == "doc" && !doc) doc = &child;
      if (child.name == "bool" && !boolNode) boolNode = &child;
    }
    if (!doc || !boolNode)
      throw MediatorError(ErrorCode::MalformedTupleResult, Stage::Backend,
                          "tuple missing <doc> or <bool> child");
    std::string lexical = lower(boolNode->stringValue());
    bool value;
    if (lexical == "true" || lexical == "1") value = true;
    else if (lexical == "false" || lexical == "0") value = false;
    else
      throw MediatorError(ErrorCode::MalformedTupleResult, Stage::Backend,
                          "unrecognized boolean lexical '" + lexical + "'");
    std::string id = doc->stringValue();
    auto [it, inserted] = index.try_emplace(id, result.entries.size());
    if (inserted)
      result.entries.push_back({DocumentId{id}, value});
    else
      result.entries[it->second].value |= value;
  }
  return result;
}

Executor::Executor(SparqlBackend& sparql, XmlBackend& xml, ExecutorConfig cfg)
    : sparql_(sparql), xml_(xml), cfg_(std::move(cfg)) {}

BindingTable Executor::dispatchSparql(const std::string& text,
                                      CancelToken cancel) {
  Timer t;
  BindingTable table = sparql_.select(text, std::move(cancel));
  double ms = t.ms();
  phases_.sparqlMs += ms;
  dispatches_.push_back(
      {sparql_.config().id, text, true, double(table.rows.size()), ms});
  return table;
}

XmlResultSequence Executor::dispatchXquery(const std::string& text,
                                           CancelToken cancel) {
  Timer t;
  XmlResultSequence seq = xml_.eval(text, std::move(cancel));
  double ms = t.ms();
  phases_.xqueryMs += ms;
  dispatches_.push_back(
      {xml_.config().id, text, false, double(seq.size()), ms});
  return seq;
}

void Executor::checkRowCap(std::size_t n) const {
  if (n > cfg_.rowCap)
    throw MediatorError(ErrorCode::RowCapExceeded, Stage::Join,
                        "intermediate result exceeds the in-memory row cap (" +
                            std::to_string(n) + " > " +
                            std::to_string(cfg_.rowCap) + ")");
}

std::vector<DocumentId> Executor::distinctDocIds(const BindingTable& table,
                                                 const Variable& key) const {
  auto idx = table.columnIndex(key);
  if (!idx)
    throw MediatorError(ErrorCode::JoinKeyMissing, Stage::Join,
                        "link variable ?" + key.name + " missing from bindings");
  std::set<std::string> distinct;
  for (const auto& row : table.rows) distinct.insert(row[*idx].lexical);
  std::vector<DocumentId> out;
  out.reserve(distinct.size());
  for (const auto& s : distinct) out.push_back(DocumentId{s});
  return out;  // lexicographically sorted by construction
}

BindingTable Executor::execute(PlanKind plan, const DecomposedQuery& d) {
  phases_ = {};
  dispatches_.clear();
  Timer total;
  BindingTable out;
  switch (plan) {
    case PlanKind::Parallel: out = executeParallel(d); break;
    case PlanKind::SparqlFirst: out = executeSparqlFirst(d); break;
    case PlanKind::XqueryFirst: out = executeXqueryFirst(d); break;
  }
  phases_.totalMs = total.ms();
  return out;
}

BindingTable Executor::executeParallel(const DecomposedQuery& d) {
  ExtendedQuery ensured = ensureLinkVarSelected(d.sparqlInstance, d.linkVariable);
  std::string sparqlText = serialize(ensured, cfg_.prefixes);
  std::string xqueryText = serialize(
      rewriteXqueryParallel(d.xqueryInstance, d.linkVariable, cfg_.collectionName));

  auto cancel = std::make_shared<std::atomic<bool>>(false);
  double sparqlMs = 0, xqueryMs = 0;
  // both requests must be in flight before either is awaited; the trace is
  // written only after both complete (the futures may run concurrently)
  auto sparqlFuture = std::async(std::launch::async, [&] {
    Timer t;
    BindingTable r = sparql_.select(sparqlText, cancel);
    sparqlMs = t.ms();
    return r;
  });
  auto xqueryFuture = std::async(std::launch::async, [&] {
    Timer t;
    XmlResultSequence r = xml_.eval(xqueryText, cancel);
    xqueryMs = t.ms();
    return r;
  });

  BindingTable left;
  XmlResultSequence xres;
  std::exception_ptr error;
  try {
    left = sparqlFuture.get();
  } catch (...) {
    error = std::current_exception();
    cancel->store(true);
  }
  try {
    xres = xqueryFuture.get();
  } catch (...) {
    if (!error) {
      error = std::current_exception();
      cancel->store(true);
    }
  }
  if (error) std::rethrow_exception(error);

  phases_.sparqlMs += sparqlMs;
  phases_.xqueryMs += xqueryMs;
  dispatches_.push_back(
      {sparql_.config().id, sparqlText, true, double(left.rows.size()), sparqlMs});
  dispatches_.push_back(
      {xml_.config().id, xqueryText, false, double(xres.size()), xqueryMs});

  // deduplicate document ids before joining (set semantics on the XML side)
  std::set<DocumentId> docIds;
  for (const auto& item : xres) docIds.insert(DocumentId{item});

  Timer join;
  checkRowCap(left.rows.size());
  checkRowCap(docIds.size());
  BindingTable joined = hashJoin(left, docIds, d.linkVariable);
  BindingTable out = project(joined, d.sparqlInstance.selectVars);
  phases_.joinMs += join.ms();
  return out;
}

BindingTable Executor::executeSparqlFirst(const DecomposedQuery& d) {
  ExtendedQuery ensured = ensureLinkVarSelected(d.sparqlInstance, d.linkVariable);
  BindingTable left = dispatchSparql(serialize(ensured, cfg_.prefixes));
  checkRowCap(left.rows.size());

  std::vector<DocumentId> docIds = distinctDocIds(left, d.linkVariable);
  if (docIds.empty()) {
    BindingTable empty;
    empty.variables = d.sparqlInstance.selectVars;
    return empty;  // short-circuit: no XQuery dispatch
  }

  std::unordered_map<std::string, bool> verdict;
  for (std::size_t off = 0; off < docIds.size(); off += cfg_.chunkLimit) {
    std::vector<DocumentId> chunk(
        docIds.begin() + off,
        docIds.begin() + std::min(off + cfg_.chunkLimit, docIds.size()));
    FlwrQuery xq = rewriteXquerySparqlFirst(d.xqueryInstance, d.linkVariable, chunk);
    XmlResultSequence seq = dispatchXquery(serialize(xq));
    XQueryTupleResult tuples = parseTupleResult(seq);
    for (const auto& entry : tuples.entries)
      verdict[entry.doc.uri] = entry.value;
  }

  Timer join;
  auto keyIdx = *left.columnIndex(d.linkVariable);
  BindingTable kept;
  kept.variables = left.variables;
  for (const auto& row : left.rows) {
    auto it = verdict.find(row[keyIdx].lexical);
    if (it != verdict.end() && it->second) kept.rows.push_back(row);
  }
  BindingTable out = project(kept, d.sparqlInstance.selectVars);
  phases_.joinMs += join.ms();
  return out;
}

BindingTable Executor::executeXqueryFirst(const DecomposedQuery& d) {
  std::string xqueryText = serialize(
      rewriteXqueryParallel(d.xqueryInstance, d.linkVariable, cfg_.collectionName));
  XmlResultSequence xres = dispatchXquery(xqueryText);

  std::set<std::string> distinct(xres.begin(), xres.end());
  if (distinct.empty()) {
    BindingTable empty;
    empty.variables = d.sparqlInstance.selectVars;
    return empty;  // short-circuit: no SPARQL dispatch
  }
  checkRowCap(distinct.size());
  std::vector<DocumentId> docIds;
  docIds.reserve(distinct.size());
  for (const auto& s : distinct) docIds.push_back(DocumentId{s});

  BindingTable out;
  out.variables = d.sparqlInstance.selectVars;
  for (std::size_t off = 0; off < docIds.size(); off += cfg_.chunkLimit) {
    std::vector<DocumentId> chunk(
        docIds.begin() + off,
        docIds.begin() + std::min(off + cfg_.chunkLimit, docIds.size()));
    ExtendedQuery rq = rewriteSparqlXqueryFirst(d.sparqlInstance, d.linkVariable, chunk);
    BindingTable part = dispatchSparql(serialize(rq, cfg_.prefixes));
    if (part.variables != out.variables)
      throw MediatorError(ErrorCode::BackendFailure, Stage::Backend,
                          "pushdown chunk returned a mismatched header");
    checkRowCap(out.rows.size() + part.rows.size());
    for (auto& row : part.rows) out.rows.push_back(std::move(row));
  }
  return out;  // no join: the rewritten SPARQL yields the final result
}

BindingTable Executor::passthrough(const ExtendedQuery& q) {
  phases_ = {};
  dispatches_.clear();
  Timer total;
  BindingTable out = dispatchSparql(serialize(q, cfg_.prefixes));
  phases_.totalMs = total.ms();
  return out;
}

RewrittenPlanQueries buildPlanQueries(
    const DecomposedQuery& d, PlanKind plan, const std::string& collectionName,
    const PrefixMap& prefixes,
    const std::optional<std::vector<DocumentId>>& docIds) {
  RewrittenPlanQueries out;
  out.plan = plan;
  ExtendedQuery ensured = ensureLinkVarSelected(d.sparqlInstance, d.linkVariable);
  switch (plan) {
    case PlanKind::Parallel:
      out.sparqlText = serialize(ensured, prefixes);
      out.xqueryText = serialize(
          rewriteXqueryParallel(d.xqueryInstance, d.linkVariable, collectionName));
      out.joinRequired = true;
      out.joinKeyVariable = d.linkVariable;
      break;
    case PlanKind::SparqlFirst:
      out.sparqlText = serialize(ensured, prefixes);
      if (docIds)
        out.xqueryText = serialize(
            rewriteXquerySparqlFirst(d.xqueryInstance, d.linkVariable, *docIds));
      out.joinRequired = true;
      out.joinKeyVariable = d.linkVariable;
      break;
    case PlanKind::XqueryFirst:
      out.xqueryText = serialize(
          rewriteXqueryParallel(d.xqueryInstance, d.linkVariable, collectionName));
      if (docIds)
        out.sparqlText = serialize(
            rewriteSparqlXqueryFirst(d.sparqlInstance, d.linkVariable, *docIds),
            prefixes);
      out.joinRequired = false;
      break;
  }
  return out;
}

std::string ExplainReport::toText() const {
  char buf[256];
  std::string out;
  if (passthrough) {
    out += "plan: passthrough (plain SPARQL)\n";
  } else {
    out += std::string("plan: ") + planName(chosenPlan) +
           (overridden ? " (overridden)" : " (auto)") + "\n";
  }
  if (estimated) {
    std::snprintf(buf, sizeof buf,
                  "costs: parallel=%.3f sparql-first=%.3f xquery-first=%.3f\n",
                  costs.parallel, costs.sparqlFirst, costs.xqueryFirst);
    out += buf;
    std::snprintf(buf, sizeof buf,
                  "estimate: cSparql=%.3f cXquery=%.3f cJoinParallel=%.3f "
                  "cJoinSparqlFirst=%.3f rhoSparql=%.4f rhoXquery=%.4f\n",
                  estimate.cSparql, estimate.cXquery, estimate.cJoinParallel,
                  estimate.cJoinSparqlFirst, estimate.rhoSparql,
                  estimate.rhoXquery);
    out += buf;
  }
  if (executed) {
    std::snprintf(buf, sizeof buf,
                  "phases: sparql=%.3fms xquery=%.3fms join=%.3fms total=%.3fms\n",
                  phases.sparqlMs, phases.xqueryMs, phases.joinMs, phases.totalMs);
    out += buf;
    out += "rows: " + std::to_string(resultRows) + "\n";
  }
  if (!sparqlText.empty()) out += "-- sparql --\n" + sparqlText;
  if (xqueryText) out += "-- xquery --\n" + *xqueryText;
  return out;
}

RunOutcome run(const std::string& queryText, MediatorContext& ctx,
               std::optional<PlanKind> planOverride) {
  ExtendedQuery q = parseExtendedQuery(queryText, ctx.execCfg.prefixes);
  Executor executor(ctx.sparql, ctx.xml, ctx.execCfg);
  RunOutcome outcome;

  if (q.where.xqueryFilters.empty()) {
    outcome.table = executor.passthrough(q);
    outcome.report.passthrough = true;
    outcome.report.executed = true;
    outcome.report.sparqlText = serialize(q, ctx.execCfg.prefixes);
  } else {
    DecomposedQuery d = decompose(q);
    Estimator estimator(ctx.catalog, &ctx.sparql, &ctx.xml,
                        ctx.execCfg.collectionName, ctx.execCfg.prefixes,
                        ctx.estimatorCfg);
    PlanKind plan;
    if (ctx.fixedEstimate) {
      auto detail = estimator.costsForFixed(*ctx.fixedEstimate);
      outcome.report.estimate = detail.estimate;
      outcome.report.costs = detail.costs;
      outcome.report.estimated = true;
      plan = planOverride.value_or(choosePlan(detail.costs));
    } else if (planOverride) {
      plan = *planOverride;  // no estimation needed for a fixed plan
    } else {
      auto detail = estimator.estimateWithCosts(d, ctx.mode);
      outcome.report.estimate = detail.estimate;
      outcome.report.costs = detail.costs;
      outcome.report.estimated = true;
      plan = choosePlan(detail.costs);
    }
    outcome.report.chosenPlan = plan;
    outcome.report.overridden = planOverride.has_value();

    outcome.table = executor.execute(plan, d);
    outcome.report.executed = true;
    for (const auto& rec : executor.dispatches()) {
      if (rec.isSparql && outcome.report.sparqlText.empty())
        outcome.report.sparqlText = rec.queryText;
      if (!rec.isSparql && !outcome.report.xqueryText)
        outcome.report.xqueryText = rec.queryText;
    }
  }

  outcome.report.phases = executor.phases();
  outcome.report.resultRows = outcome.table.rows.size();

  if (ctx.recordObservations) {
    for (const auto& rec : executor.dispatches())
      ctx.catalog.record(fingerprint(rec.queryText), rec.cardinality,
                         rec.elapsedMs, rec.backendId);
  }
  return outcome;
}

}  // namespace xqfed
