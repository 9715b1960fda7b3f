#include "xqfed/rewrite.hpp"

#include <algorithm>
#include <set>

#include "xqfed/errors.hpp"

namespace xqfed {

const char* planName(PlanKind plan) {
  switch (plan) {
    case PlanKind::Parallel: return "parallel";
    case PlanKind::SparqlFirst: return "sparql-first";
    case PlanKind::XqueryFirst: return "xquery-first";
  }
  return "?";
}

std::optional<PlanKind> planFromName(const std::string& name) {
  if (name == "parallel") return PlanKind::Parallel;
  if (name == "sparql-first") return PlanKind::SparqlFirst;
  if (name == "xquery-first") return PlanKind::XqueryFirst;
  return std::nullopt;
}

ExtendedQuery ensureLinkVarSelected(const ExtendedQuery& q, const Variable& v) {
  if (!freeVariables(q.where).count(v))
    throw MediatorError(ErrorCode::VariableNotInPattern, Stage::Plan,
                        "variable ?" + v.name + " is not part of the WHERE pattern");
  if (std::find(q.selectVars.begin(), q.selectVars.end(), v) !=
      q.selectVars.end())
    return q;
  ExtendedQuery out = q;
  out.selectVars.push_back(v);
  return out;
}

namespace {

void collectXqVarNames(const XqExpr& e, std::set<std::string>& out) {
  if (e.kind == XqExpr::Kind::XqVarRef) out.insert(e.value);
  for (const auto& a : e.args) collectXqVarNames(a, out);
  for (const auto& s : e.steps)
    for (const auto& p : s.predicates) collectXqVarNames(p, out);
}

/// Fresh injected variable: "__doc", falling back to "__doc1", ... when the
/// query already uses the name.
std::string freshDocVar(const FlwrQuery& q) {
  std::set<std::string> used;
  for (const auto& c : q.forClauses) {
    used.insert(c.var);
    collectXqVarNames(c.expr, used);
  }
  for (const auto& c : q.letClauses) {
    used.insert(c.var);
    collectXqVarNames(c.expr, used);
  }
  if (q.whereExpr) collectXqVarNames(*q.whereExpr, used);
  collectXqVarNames(q.returnExpr, used);
  std::string name = "__doc";
  for (int i = 1; used.count(name); ++i) name = "__doc" + std::to_string(i);
  return name;
}

bool isDocCallOfVar(const XqExpr& e, const std::string& linkVar) {
  return e.kind == XqExpr::Kind::FunctionCall && e.value == "doc" &&
         e.args.size() == 1 &&
         e.args[0].kind == XqExpr::Kind::SparqlVarRef &&
         e.args[0].value == linkVar;
}

int countDocCalls(const XqExpr& e, const std::string& linkVar) {
  int n = isDocCallOfVar(e, linkVar) ? 1 : 0;
  for (const auto& a : e.args) n += countDocCalls(a, linkVar);
  for (const auto& s : e.steps)
    for (const auto& p : s.predicates) n += countDocCalls(p, linkVar);
  return n;
}

void replaceDocCall(XqExpr& e, const std::string& linkVar,
                    const std::string& freshVar) {
  if (isDocCallOfVar(e, linkVar)) {
    e = XqExpr::xqVar(freshVar);
    return;
  }
  for (auto& a : e.args) replaceDocCall(a, linkVar, freshVar);
  for (auto& s : e.steps)
    for (auto& p : s.predicates) replaceDocCall(p, linkVar, freshVar);
}

bool hasSparqlVarRef(const XqExpr& e) {
  if (e.kind == XqExpr::Kind::SparqlVarRef) return true;
  for (const auto& a : e.args)
    if (hasSparqlVarRef(a)) return true;
  for (const auto& s : e.steps)
    for (const auto& p : s.predicates)
      if (hasSparqlVarRef(p)) return true;
  return false;
}

/// Validates the doc(?link) occurrence contract and swaps the call for the
/// injected variable across all clauses.
std::string replaceLinkedDocCall(FlwrQuery& q, const Variable& linkVar) {
  int calls = 0;
  auto countIn = [&](const XqExpr& e) { calls += countDocCalls(e, linkVar.name); };
  for (const auto& c : q.forClauses) countIn(c.expr);
  for (const auto& c : q.letClauses) countIn(c.expr);
  if (q.whereExpr) countIn(*q.whereExpr);
  countIn(q.returnExpr);
  if (calls == 0)
    throw MediatorError(ErrorCode::LinkVarNotInDocCall, Stage::Plan,
                        "?" + linkVar.name + " does not occur inside a doc() call");
  if (calls > 1)
    throw MediatorError(ErrorCode::DocCallAmbiguous, Stage::Plan,
                        "?" + linkVar.name + " occurs in more than one doc() call");
  std::string fresh = freshDocVar(q);
  for (auto& c : q.forClauses) replaceDocCall(c.expr, linkVar.name, fresh);
  for (auto& c : q.letClauses) replaceDocCall(c.expr, linkVar.name, fresh);
  if (q.whereExpr) replaceDocCall(*q.whereExpr, linkVar.name, fresh);
  replaceDocCall(q.returnExpr, linkVar.name, fresh);

  bool leftover = false;
  for (const auto& c : q.forClauses) leftover |= hasSparqlVarRef(c.expr);
  for (const auto& c : q.letClauses) leftover |= hasSparqlVarRef(c.expr);
  if (q.whereExpr) leftover |= hasSparqlVarRef(*q.whereExpr);
  leftover |= hasSparqlVarRef(q.returnExpr);
  if (leftover)
    throw MediatorError(ErrorCode::LinkVarNotInDocCall, Stage::Plan,
                        "?" + linkVar.name + " occurs outside the doc() call");
  return fresh;
}

}  // namespace

FlwrQuery rewriteXqueryParallel(const FlwrQuery& x, const Variable& linkVar,
                                const std::string& collectionName) {
  FlwrQuery out = x;
  std::string fresh = replaceLinkedDocCall(out, linkVar);

  FlwrBinding enumerate{
      fresh, XqExpr::call("collection", {XqExpr::stringLit(collectionName)})};
  out.forClauses.insert(out.forClauses.begin(), std::move(enumerate));

  XqExpr condition = out.returnExpr;
  if (out.whereExpr)
    out.whereExpr = XqExpr::boolOp("and", std::move(*out.whereExpr),
                                   std::move(condition));
  else
    out.whereExpr = std::move(condition);
  out.returnExpr = XqExpr::call("base-uri", {XqExpr::xqVar(fresh)});
  return out;
}

FlwrQuery rewriteXquerySparqlFirst(const FlwrQuery& x, const Variable& linkVar,
                                   const std::vector<DocumentId>& docIds) {
  if (docIds.empty())
    throw MediatorError(ErrorCode::EmptyBindingList, Stage::Plan,
                        "no document ids to push down");
  FlwrQuery out = x;
  std::string fresh = replaceLinkedDocCall(out, linkVar);

  std::vector<XqExpr> items;
  items.reserve(docIds.size());
  for (const auto& id : docIds) items.push_back(XqExpr::stringLit(id.uri));
  FlwrBinding enumerate{fresh, XqExpr::sequence(std::move(items))};
  out.forClauses.insert(out.forClauses.begin(), std::move(enumerate));

  XqExpr docChild = XqExpr::element("doc", {XqExpr::xqVar(fresh)});
  XqExpr boolChild = XqExpr::element("bool", {out.returnExpr});
  out.returnExpr =
      XqExpr::element("tuple", {std::move(docChild), std::move(boolChild)});
  return out;
}

namespace {

void substituteInFilter(FilterExpr& e, const std::string& name,
                        const std::string& value) {
  if (e.kind == FilterExpr::Kind::Var && e.value == name) {
    e = FilterExpr::str(value);
    return;
  }
  for (auto& a : e.args) substituteInFilter(a, name, value);
}

void substituteInPattern(GraphPattern& p, const Variable& v,
                         const std::string& value) {
  for (auto& t : p.triples) {
    auto sub = [&](VarOrTerm& term) {
      if (const auto* var = std::get_if<Variable>(&term); var && *var == v)
        term = RdfTerm::literal(value);
    };
    sub(t.subject);
    if (const auto* var = std::get_if<Variable>(&t.predicate); var && *var == v)
      throw MediatorError(ErrorCode::UnsupportedFeature, Stage::Plan,
                          "link variable in predicate position cannot be "
                          "replaced by a literal");
    sub(t.object);
  }
  for (auto& f : p.filters) substituteInFilter(f, v.name, value);
  for (auto& s : p.services) substituteInPattern(s.inner, v, value);
  for (auto& u : p.unions) substituteInPattern(u, v, value);
}

}  // namespace

ExtendedQuery rewriteSparqlXqueryFirst(const ExtendedQuery& q,
                                       const Variable& linkVar,
                                       const std::vector<DocumentId>& docIds) {
  if (docIds.empty())
    throw MediatorError(ErrorCode::EmptyBindingList, Stage::Plan,
                        "no document ids to push down");
  if (!freeVariables(q.where).count(linkVar))
    throw MediatorError(ErrorCode::VariableNotInPattern, Stage::Plan,
                        "variable ?" + linkVar.name + " is not part of the WHERE pattern");

  bool selected = std::find(q.selectVars.begin(), q.selectVars.end(),
                            linkVar) != q.selectVars.end();

  std::vector<GraphPattern> branches;
  branches.reserve(docIds.size());
  for (const auto& id : docIds) {
    GraphPattern branch = q.where;
    if (selected) {
      // pin instead of substitute, so the selected binding survives
      branch.filters.push_back(FilterExpr::compare(
          "=", FilterExpr::variable(linkVar.name), FilterExpr::str(id.uri)));
    } else {
      substituteInPattern(branch, linkVar, id.uri);
    }
    branches.push_back(std::move(branch));
  }

  ExtendedQuery out;
  out.selectVars = q.selectVars;
  if (branches.size() == 1) {
    out.where = std::move(branches.front());
  } else {
    out.where.unions = std::move(branches);
  }
  return out;
}

}  // namespace xqfed
