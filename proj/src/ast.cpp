#include "xqfed/ast.hpp"

#include <functional>

#include "xqfed/errors.hpp"

namespace xqfed {

namespace {
constexpr const char* kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
constexpr const char* kXsdDecimal = "http://www.w3.org/2001/XMLSchema#decimal";
}  // namespace

RdfTerm RdfTerm::iri(std::string value) {
  return RdfTerm{Kind::Iri, std::move(value), std::nullopt, std::nullopt};
}

RdfTerm RdfTerm::literal(std::string value) {
  return RdfTerm{Kind::Literal, std::move(value), std::nullopt, std::nullopt};
}

RdfTerm RdfTerm::typedLiteral(std::string value, std::string datatype) {
  return RdfTerm{Kind::Literal, std::move(value), std::move(datatype), std::nullopt};
}

RdfTerm RdfTerm::integer(long long value) {
  return typedLiteral(std::to_string(value), kXsdInteger);
}

bool RdfTerm::isNumeric() const {
  return kind == Kind::Literal && datatypeIri &&
         (*datatypeIri == kXsdInteger || *datatypeIri == kXsdDecimal);
}

FilterExpr FilterExpr::variable(std::string name) {
  FilterExpr e;
  e.kind = Kind::Var;
  e.value = std::move(name);
  return e;
}

FilterExpr FilterExpr::number(std::string lexical) {
  FilterExpr e;
  e.kind = Kind::Number;
  e.value = std::move(lexical);
  return e;
}

FilterExpr FilterExpr::str(std::string lexical) {
  FilterExpr e;
  e.kind = Kind::String;
  e.value = std::move(lexical);
  return e;
}

FilterExpr FilterExpr::compare(std::string op, FilterExpr lhs, FilterExpr rhs) {
  FilterExpr e;
  e.kind = Kind::Compare;
  e.op = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

XqExpr XqExpr::stringLit(std::string s) {
  XqExpr e;
  e.kind = Kind::StringLit;
  e.value = std::move(s);
  return e;
}

XqExpr XqExpr::numberLit(std::string s) {
  XqExpr e;
  e.kind = Kind::NumberLit;
  e.value = std::move(s);
  return e;
}

XqExpr XqExpr::xqVar(std::string name) {
  XqExpr e;
  e.kind = Kind::XqVarRef;
  e.value = std::move(name);
  return e;
}

XqExpr XqExpr::sparqlVar(std::string name) {
  XqExpr e;
  e.kind = Kind::SparqlVarRef;
  e.value = std::move(name);
  return e;
}

XqExpr XqExpr::call(std::string name, std::vector<XqExpr> args) {
  XqExpr e;
  e.kind = Kind::FunctionCall;
  e.value = std::move(name);
  e.args = std::move(args);
  return e;
}

XqExpr XqExpr::compare(std::string op, XqExpr lhs, XqExpr rhs) {
  XqExpr e;
  e.kind = Kind::Compare;
  e.value = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

XqExpr XqExpr::boolOp(std::string op, XqExpr lhs, XqExpr rhs) {
  XqExpr e;
  e.kind = Kind::BoolOp;
  e.value = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

XqExpr XqExpr::rootedPath(XqExpr root, std::vector<Step> steps) {
  XqExpr e;
  e.kind = Kind::Path;
  e.hasRoot = true;
  e.args.push_back(std::move(root));
  e.steps = std::move(steps);
  return e;
}

XqExpr XqExpr::relativePath(std::vector<Step> steps) {
  XqExpr e;
  e.kind = Kind::Path;
  e.hasRoot = false;
  e.steps = std::move(steps);
  return e;
}

XqExpr XqExpr::sequence(std::vector<XqExpr> items) {
  XqExpr e;
  e.kind = Kind::Sequence;
  e.args = std::move(items);
  return e;
}

XqExpr XqExpr::element(std::string name, std::vector<XqExpr> children) {
  XqExpr e;
  e.kind = Kind::ElementCtor;
  e.value = std::move(name);
  e.args = std::move(children);
  return e;
}

bool GraphPattern::operator==(const GraphPattern& other) const {
  return triples == other.triples && filters == other.filters &&
         services == other.services && xqueryFilters == other.xqueryFilters &&
         unions == other.unions;
}

namespace {

void collectFilterVars(const FilterExpr& e, std::set<Variable>& out) {
  if (e.kind == FilterExpr::Kind::Var) out.insert(Variable{e.value});
  for (const auto& a : e.args) collectFilterVars(a, out);
}

void collectExprVars(const XqExpr& e, std::set<Variable>& out) {
  if (e.kind == XqExpr::Kind::SparqlVarRef) out.insert(Variable{e.value});
  for (const auto& a : e.args) collectExprVars(a, out);
  for (const auto& s : e.steps)
    for (const auto& p : s.predicates) collectExprVars(p, out);
}

void collectFlwrVars(const FlwrQuery& q, std::set<Variable>& out) {
  for (const auto& c : q.forClauses) collectExprVars(c.expr, out);
  for (const auto& c : q.letClauses) collectExprVars(c.expr, out);
  if (q.whereExpr) collectExprVars(*q.whereExpr, out);
  collectExprVars(q.returnExpr, out);
}

void addTermVar(const VarOrTerm& t, std::set<Variable>& out) {
  if (const auto* v = std::get_if<Variable>(&t)) out.insert(*v);
}

void collectPatternVars(const GraphPattern& p, bool triplesOnly,
                        std::set<Variable>& out) {
  for (const auto& t : p.triples) {
    addTermVar(t.subject, out);
    addTermVar(t.predicate, out);
    addTermVar(t.object, out);
  }
  if (!triplesOnly) {
    for (const auto& f : p.filters) collectFilterVars(f, out);
    for (const auto& x : p.xqueryFilters) {
      collectFlwrVars(x.body, out);
      out.insert(x.linkVariable);
    }
  }
  for (const auto& s : p.services) {
    if (!triplesOnly)
      for (const auto& v : s.subselectVars) out.insert(v);
    collectPatternVars(s.inner, triplesOnly, out);
  }
  for (const auto& u : p.unions) collectPatternVars(u, triplesOnly, out);
}

}  // namespace

std::set<Variable> freeVariables(const GraphPattern& pattern) {
  std::set<Variable> out;
  collectPatternVars(pattern, /*triplesOnly=*/false, out);
  return out;
}

std::set<Variable> tripleVariables(const GraphPattern& pattern) {
  std::set<Variable> out;
  collectPatternVars(pattern, /*triplesOnly=*/true, out);
  return out;
}

std::set<Variable> sparqlVariables(const FlwrQuery& q) {
  std::set<Variable> out;
  collectFlwrVars(q, out);
  return out;
}

namespace {

std::size_t substituteExpr(XqExpr& e, const std::string& name,
                           const std::string& value) {
  std::size_t hits = 0;
  if (e.kind == XqExpr::Kind::SparqlVarRef && e.value == name) {
    e = XqExpr::stringLit(value);
    return 1;
  }
  for (auto& a : e.args) hits += substituteExpr(a, name, value);
  for (auto& s : e.steps)
    for (auto& p : s.predicates) hits += substituteExpr(p, name, value);
  return hits;
}

}  // namespace

FlwrQuery substituteVariable(const FlwrQuery& q, const Variable& v,
                             const std::string& value) {
  FlwrQuery out = q;
  std::size_t hits = 0;
  for (auto& c : out.forClauses) hits += substituteExpr(c.expr, v.name, value);
  for (auto& c : out.letClauses) hits += substituteExpr(c.expr, v.name, value);
  if (out.whereExpr) hits += substituteExpr(*out.whereExpr, v.name, value);
  hits += substituteExpr(out.returnExpr, v.name, value);
  if (hits == 0)
    throw MediatorError(ErrorCode::VariableNotFound, Stage::Parse,
                        "variable ?" + v.name + " does not occur in the XQuery instance");
  return out;
}

namespace {

std::size_t exprNodeCount(const XqExpr& e) {
  std::size_t n = 1;
  for (const auto& a : e.args) n += exprNodeCount(a);
  for (const auto& s : e.steps) {
    n += 1;
    for (const auto& p : s.predicates) n += exprNodeCount(p);
  }
  return n;
}

}  // namespace

std::size_t nodeCount(const FlwrQuery& q) {
  std::size_t n = 0;
  for (const auto& c : q.forClauses) n += 1 + exprNodeCount(c.expr);
  for (const auto& c : q.letClauses) n += 1 + exprNodeCount(c.expr);
  if (q.whereExpr) n += exprNodeCount(*q.whereExpr);
  n += exprNodeCount(q.returnExpr);
  return n;
}

bool hasBooleanReturn(const FlwrQuery& q) {
  const XqExpr& r = q.returnExpr;
  if (r.kind == XqExpr::Kind::Compare || r.kind == XqExpr::Kind::BoolOp)
    return true;
  if (r.kind == XqExpr::Kind::FunctionCall)
    return r.value == "contains" || r.value == "exists" || r.value == "not";
  return false;
}

const char* errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::MultipleSparqlVarsInXQuery: return "MultipleSparqlVarsInXQuery";
    case ErrorCode::NoSparqlVarInXQuery: return "NoSparqlVarInXQuery";
    case ErrorCode::MultipleXQueryFilters: return "MultipleXQueryFilters";
    case ErrorCode::NonBooleanReturn: return "NonBooleanReturn";
    case ErrorCode::XQueryFilterInService: return "XQueryFilterInService";
    case ErrorCode::LinkVarNotInPattern: return "LinkVarNotInPattern";
    case ErrorCode::VariableNotFound: return "VariableNotFound";
    case ErrorCode::NoXQueryFilter: return "NoXQueryFilter";
    case ErrorCode::VariableNotInPattern: return "VariableNotInPattern";
    case ErrorCode::LinkVarNotInDocCall: return "LinkVarNotInDocCall";
    case ErrorCode::DocCallAmbiguous: return "DocCallAmbiguous";
    case ErrorCode::EmptyBindingList: return "EmptyBindingList";
    case ErrorCode::InvalidEstimate: return "InvalidEstimate";
    case ErrorCode::NoStatsAvailable: return "NoStatsAvailable";
    case ErrorCode::JoinKeyMissing: return "JoinKeyMissing";
    case ErrorCode::MalformedTupleResult: return "MalformedTupleResult";
    case ErrorCode::RowCapExceeded: return "RowCapExceeded";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::XQueryRuntimeError: return "XQueryRuntimeError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InfeasibleGrid: return "InfeasibleGrid";
  }
  return "UnknownError";
}

const char* stageName(Stage stage) {
  switch (stage) {
    case Stage::Config: return "config";
    case Stage::Parse: return "parse";
    case Stage::Plan: return "plan";
    case Stage::Backend: return "backend";
    case Stage::Join: return "join";
  }
  return "unknown";
}

std::string ParseError::describe() const {
  std::string s = std::string(errorCodeName(code())) + " at " +
                  std::to_string(line_) + ":" + std::to_string(column_) + ": " + what();
  if (!expected_.empty()) {
    s += " (expected: ";
    for (std::size_t i = 0; i < expected_.size(); ++i) {
      if (i) s += ", ";
      s += expected_[i];
    }
    s += ")";
  }
  return s;
}

}  // namespace xqfed
