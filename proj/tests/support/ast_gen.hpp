#pragma once

// Random AST generators used by round-trip and rewrite property tests. The
// shapes stay inside the canonical grammar: relative paths start with a child
// step, sequences have at least two items, comparisons never nest.

#include <random>
#include <string>
#include <vector>

#include "xqfed/ast.hpp"

namespace xqfed::testing {

class AstGen {
public:
  explicit AstGen(std::mt19937_64& rng) : rng_(rng) {}

  std::string name() {
    static const char* names[] = {"alpha", "beta", "gamma", "delta", "mail",
                                  "leaveDate", "body", "item", "note"};
    return names[pick(std::size(names))];
  }

  std::string varName() {
    static const char* names[] = {"a", "b", "c", "d", "x", "y", "doc", "pop"};
    return names[pick(std::size(names))];
  }

  XqExpr::Step step(bool first) {
    XqExpr::Step s;
    s.descendant = first ? false : chance(0.5);
    s.nameTest = chance(0.1) ? "*" : name();
    if (chance(0.4)) s.predicates.push_back(xqExpr(1, false, ""));
    return s;
  }

  XqExpr atom(bool allowSparqlVar, const std::string& sparqlVar) {
    switch (pick(5)) {
      case 0: return XqExpr::stringLit(name() + " text");
      case 1: return XqExpr::numberLit(std::to_string(pick(1000)));
      case 2: return XqExpr::xqVar(varName());
      case 3:
        if (allowSparqlVar) return XqExpr::sparqlVar(sparqlVar);
        return XqExpr::xqVar(varName());
      default: {
        std::vector<XqExpr::Step> steps;
        steps.push_back(step(true));
        if (chance(0.5)) steps.push_back(step(false));
        return XqExpr::relativePath(std::move(steps));
      }
    }
  }

  XqExpr xqExpr(int depth, bool allowSparqlVar, const std::string& sparqlVar) {
    if (depth <= 0) return atom(allowSparqlVar, sparqlVar);
    switch (pick(7)) {
      case 0:
        return XqExpr::compare(cmpOp(), atom(allowSparqlVar, sparqlVar),
                               xqNonCompare(depth - 1));
      case 1:
        return XqExpr::boolOp(chance(0.5) ? "and" : "or",
                              xqExpr(depth - 1, allowSparqlVar, sparqlVar),
                              xqExpr(depth - 1, false, ""));
      case 2: {
        std::vector<XqExpr> args;
        int n = pick(3);
        for (int i = 0; i < n; ++i) args.push_back(xqExpr(depth - 1, false, ""));
        static const char* fns[] = {"contains", "count", "exists", "f", "g"};
        return XqExpr::call(fns[pick(std::size(fns))], std::move(args));
      }
      case 3: {
        std::vector<XqExpr::Step> steps;
        steps.push_back(step(false));
        XqExpr root = chance(0.5) ? XqExpr::xqVar(varName())
                                  : XqExpr::call("doc", {XqExpr::stringLit(name())});
        return XqExpr::rootedPath(std::move(root), std::move(steps));
      }
      case 4: {
        std::vector<XqExpr> items;
        int n = 2 + int(pick(2));
        for (int i = 0; i < n; ++i) items.push_back(atom(false, ""));
        return XqExpr::sequence(std::move(items));
      }
      case 5: {
        std::vector<XqExpr> children;
        if (chance(0.7)) children.push_back(xqExpr(depth - 1, false, ""));
        if (chance(0.3))
          children.push_back(XqExpr::element(name(), {atom(false, "")}));
        return XqExpr::element(name(), std::move(children));
      }
      default: return atom(allowSparqlVar, sparqlVar);
    }
  }

  XqExpr xqNonCompare(int depth) {
    XqExpr e = xqExpr(depth, false, "");
    while (e.kind == XqExpr::Kind::Compare) e = atom(false, "");
    return e;
  }

  /// FLWR with the SPARQL variable inside exactly one doc(...) call.
  FlwrQuery flwrWithLink(const std::string& sparqlVar) {
    FlwrQuery q;
    XqExpr docCall = XqExpr::call("doc", {XqExpr::sparqlVar(sparqlVar)});
    std::vector<XqExpr::Step> steps;
    steps.push_back(step(false));
    XqExpr rooted = XqExpr::rootedPath(std::move(docCall), std::move(steps));
    if (chance(0.5)) {
      q.forClauses.push_back({"m", std::move(rooted)});
      if (chance(0.5)) q.forClauses.push_back({"n", xqExpr(1, false, "")});
    } else {
      q.letClauses.push_back({"x", std::move(rooted)});
    }
    if (chance(0.5)) q.whereExpr = xqExpr(1, false, "");
    q.returnExpr = XqExpr::call(
        "contains", {XqExpr::xqVar(q.forClauses.empty() ? "x" : "m"),
                     XqExpr::stringLit(name())});
    return q;
  }

  FlwrQuery flwr() {
    FlwrQuery q;
    int fors = int(pick(3));
    for (int i = 0; i < fors; ++i)
      q.forClauses.push_back({varName() + std::to_string(i), xqExpr(2, false, "")});
    int lets = int(pick(2));
    for (int i = 0; i < lets; ++i)
      q.letClauses.push_back({"l" + std::to_string(i), xqExpr(2, false, "")});
    if (chance(0.5)) q.whereExpr = xqExpr(2, false, "");
    q.returnExpr = xqExpr(2, false, "");
    return q;
  }

  RdfTerm iri() {
    if (chance(0.5)) return RdfTerm::iri("http://example.org/" + name());
    return RdfTerm::iri("http://data.test/" + name());
  }

  VarOrTerm varOrIri(std::vector<Variable>& vars) {
    if (chance(0.6)) {
      Variable v{varName()};
      vars.push_back(v);
      return v;
    }
    return iri();
  }

  GraphPattern pattern(int depth, bool allowService) {
    GraphPattern p;
    std::vector<Variable> scratch;
    int triples = 1 + int(pick(3));
    for (int i = 0; i < triples; ++i) {
      TriplePattern tp{varOrIri(scratch), iri(), varOrIri(scratch)};
      if (chance(0.3)) tp.object = RdfTerm::literal(name());
      if (chance(0.2)) tp.object = RdfTerm::integer(long(pick(100000)));
      p.triples.push_back(std::move(tp));
    }
    // filters may only reference variables the final triples actually bind
    std::vector<Variable> vars;
    for (const auto& tp : p.triples) {
      if (const auto* v = std::get_if<Variable>(&tp.subject)) vars.push_back(*v);
      if (const auto* v = std::get_if<Variable>(&tp.object)) vars.push_back(*v);
    }
    if (!vars.empty() && chance(0.5)) {
      FilterExpr lhs = FilterExpr::variable(vars[pick(vars.size())].name);
      FilterExpr rhs = FilterExpr::number(std::to_string(pick(1000)));
      if (chance(0.3)) {
        FilterExpr sum;
        sum.kind = FilterExpr::Kind::Arith;
        sum.op = "+";
        sum.args.push_back(rhs);
        sum.args.push_back(FilterExpr::number(std::to_string(1 + pick(9))));
        rhs = std::move(sum);
      }
      p.filters.push_back(FilterExpr::compare(cmpOp(), std::move(lhs), std::move(rhs)));
    }
    if (allowService && depth > 0 && chance(0.4)) {
      ServiceBlock svc;
      svc.endpointIri = "http://endpoint.test/sparql";
      svc.inner = pattern(depth - 1, false);
      if (chance(0.5)) {
        std::set<Variable> innerVars = tripleVariables(svc.inner);
        if (!innerVars.empty()) {
          svc.hasSubselect = true;
          svc.subselectVars.push_back(*innerVars.begin());
        }
      }
      p.services.push_back(std::move(svc));
    }
    if (depth > 0 && chance(0.3)) {
      int branches = 1 + int(pick(2));
      for (int i = 0; i < branches; ++i)
        p.unions.push_back(pattern(0, false));
    }
    return p;
  }

  ExtendedQuery query() {
    ExtendedQuery q;
    q.where = pattern(1, true);
    std::set<Variable> vars = tripleVariables(q.where);
    if (vars.empty()) {
      q.where.triples.push_back(
          TriplePattern{Variable{"s"}, iri(), RdfTerm::literal("v")});
      vars.insert(Variable{"s"});
    }
    for (const auto& v : vars) {
      q.selectVars.push_back(v);
      if (chance(0.5)) break;
    }
    return q;
  }

  bool chance(double p) {
    return std::uniform_real_distribution<double>(0, 1)(rng_) < p;
  }
  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

private:
  std::string cmpOp() {
    static const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
    return ops[pick(std::size(ops))];
  }

  std::mt19937_64& rng_;
};

}  // namespace xqfed::testing
