#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace xqfed {

/// A SPARQL variable, stored without the leading '?'.
struct Variable {
  std::string name;

  auto operator<=>(const Variable&) const = default;
};

/// An RDF term: IRI, literal or blank node.
struct RdfTerm {
  enum class Kind { Iri, Literal, BlankNode };

  Kind kind = Kind::Iri;
  std::string lexical;
  std::optional<std::string> datatypeIri;
  std::optional<std::string> langTag;

  static RdfTerm iri(std::string value);
  static RdfTerm literal(std::string value);
  static RdfTerm typedLiteral(std::string value, std::string datatype);
  static RdfTerm integer(long long value);

  /// True for literals typed xsd:integer or xsd:decimal.
  bool isNumeric() const;

  auto operator<=>(const RdfTerm&) const = default;
};

using VarOrTerm = std::variant<Variable, RdfTerm>;

struct TriplePattern {
  VarOrTerm subject;
  VarOrTerm predicate;  // never a literal
  VarOrTerm object;

  bool operator==(const TriplePattern&) const = default;
};

/// FILTER expression tree: comparisons and arithmetic over variables and
/// literals.
struct FilterExpr {
  enum class Kind { Compare, Arith, Var, Number, String, Iri };

  Kind kind = Kind::Number;
  std::string op;     // ">", ">=", "=", "+", "*", ... for Compare/Arith
  std::string value;  // variable name / literal lexical / IRI
  std::vector<FilterExpr> args;

  static FilterExpr variable(std::string name);
  static FilterExpr number(std::string lexical);
  static FilterExpr str(std::string lexical);
  static FilterExpr compare(std::string op, FilterExpr lhs, FilterExpr rhs);

  bool operator==(const FilterExpr&) const = default;
};

// ---------------------------------------------------------------------------
// XQuery FLWR subset
// ---------------------------------------------------------------------------

/// Recursive XQuery expression tree covering the FLWR subset: paths,
/// predicates, function calls, comparisons, boolean connectives, literals,
/// variable references, sequences and element constructors.
struct XqExpr {
  enum class Kind {
    StringLit,
    NumberLit,
    XqVarRef,      // $name
    SparqlVarRef,  // ?name
    FunctionCall,  // doc, collection, contains, base-uri, xs:date, count, ...
    Compare,       // args[0] op args[1]
    BoolOp,        // "and" / "or", two or more args
    Path,          // optional root (args[0] when hasRoot) + steps
    Sequence,      // ('a', 'b', ...)
    ElementCtor,   // <name>children</name>; non-ctor children render as {expr}
  };

  struct Step {
    bool descendant = false;  // true for '//', false for '/'
    std::string nameTest;     // element name or "*"
    std::vector<XqExpr> predicates;

    bool operator==(const Step&) const = default;
  };

  Kind kind = Kind::StringLit;
  std::string value;  // literal lexical / variable name / function or op name
  bool hasRoot = false;
  std::vector<XqExpr> args;
  std::vector<Step> steps;

  static XqExpr stringLit(std::string s);
  static XqExpr numberLit(std::string s);
  static XqExpr xqVar(std::string name);
  static XqExpr sparqlVar(std::string name);
  static XqExpr call(std::string name, std::vector<XqExpr> args);
  static XqExpr compare(std::string op, XqExpr lhs, XqExpr rhs);
  static XqExpr boolOp(std::string op, XqExpr lhs, XqExpr rhs);
  static XqExpr rootedPath(XqExpr root, std::vector<Step> steps);
  static XqExpr relativePath(std::vector<Step> steps);
  static XqExpr sequence(std::vector<XqExpr> items);
  static XqExpr element(std::string name, std::vector<XqExpr> children);

  bool operator==(const XqExpr&) const = default;
};

struct FlwrBinding {
  std::string var;  // without '$'
  XqExpr expr;

  bool operator==(const FlwrBinding&) const = default;
};

/// A FLWR query: FOR*, LET*, WHERE?, RETURN. `countWrapped` marks the
/// count(...) probe form used for cardinality estimation.
struct FlwrQuery {
  std::vector<FlwrBinding> forClauses;
  std::vector<FlwrBinding> letClauses;
  std::optional<XqExpr> whereExpr;
  XqExpr returnExpr;
  bool countWrapped = false;

  bool operator==(const FlwrQuery&) const = default;
};

// ---------------------------------------------------------------------------
// Extended SPARQL
// ---------------------------------------------------------------------------

struct XQueryFilterClause {
  FlwrQuery body;
  Variable linkVariable;

  bool operator==(const XQueryFilterClause&) const = default;
};

struct ServiceBlock;

/// A group graph pattern. Clause categories keep their input order; the
/// canonical clause order across categories is triples, services, unions,
/// filters, XQueryFILTER.
struct GraphPattern {
  std::vector<TriplePattern> triples;
  std::vector<FilterExpr> filters;
  std::vector<ServiceBlock> services;
  std::vector<XQueryFilterClause> xqueryFilters;
  std::vector<GraphPattern> unions;  // alternatives; empty unless a union chain is present

  bool operator==(const GraphPattern&) const;
};

struct ServiceBlock {
  std::string endpointIri;
  bool hasSubselect = false;
  std::vector<Variable> subselectVars;  // meaningful when hasSubselect
  GraphPattern inner;

  bool operator==(const ServiceBlock&) const = default;
};

/// Parsed extended-SPARQL query. `countProbe` marks the
/// SELECT ( COUNT(*) AS ?v ) probe form. `sourceText` is informational and
/// excluded from equality.
struct ExtendedQuery {
  std::vector<Variable> selectVars;
  GraphPattern where;
  std::string sourceText;
  bool countProbe = false;

  bool operator==(const ExtendedQuery& other) const {
    return selectVars == other.selectVars && where == other.where &&
           countProbe == other.countProbe;
  }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Every SPARQL variable occurring in triples, filters, services
/// (recursively) and XQueryFILTER clauses of the pattern.
std::set<Variable> freeVariables(const GraphPattern& pattern);

/// Variables referenced from triple patterns only (any nesting level).
std::set<Variable> tripleVariables(const GraphPattern& pattern);

/// Distinct SPARQL variables referenced inside a FLWR query.
std::set<Variable> sparqlVariables(const FlwrQuery& q);

/// Replaces every occurrence of SPARQL variable `v` in `q` with a string
/// literal. Throws MediatorError{VariableNotFound} when `v` does not occur.
FlwrQuery substituteVariable(const FlwrQuery& q, const Variable& v,
                             const std::string& value);

/// Total node count of the expression trees in a FLWR query (used by
/// structural tests).
std::size_t nodeCount(const FlwrQuery& q);

/// True when the RETURN head is statically boolean-valued: a comparison, a
/// boolean connective, or one of contains/exists/not.
bool hasBooleanReturn(const FlwrQuery& q);

}  // namespace xqfed
