#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xqfed/ast.hpp"
#include "xqfed/binding_table.hpp"

namespace xqfed {

enum class PlanKind { Parallel, SparqlFirst, XqueryFirst };

const char* planName(PlanKind plan);
std::optional<PlanKind> planFromName(const std::string& name);

/// Executable query texts for one plan.
struct RewrittenPlanQueries {
  PlanKind plan = PlanKind::Parallel;
  std::string sparqlText;
  std::optional<std::string> xqueryText;
  bool joinRequired = false;
  std::optional<Variable> joinKeyVariable;
};

/// Appends `v` to the SELECT list unless already present. Throws
/// MediatorError{VariableNotInPattern} when `v` is not free in the WHERE
/// pattern.
ExtendedQuery ensureLinkVarSelected(const ExtendedQuery& q, const Variable& v);

/// Parallel-plan XQuery rewrite: prepend a collection-enumerating FOR clause,
/// replace doc(?link) with the injected variable, move the RETURN condition
/// into WHERE, and RETURN base-uri of the injected variable.
FlwrQuery rewriteXqueryParallel(const FlwrQuery& x, const Variable& linkVar,
                                const std::string& collectionName);

/// SPARQL-first XQuery rewrite: prepend a FOR clause enumerating the pushed
/// document ids, replace doc(?link), and RETURN <tuple><doc>..</doc>
/// <bool>..</bool></tuple> pairs. The original WHERE is preserved.
FlwrQuery rewriteXquerySparqlFirst(const FlwrQuery& x, const Variable& linkVar,
                                   const std::vector<DocumentId>& docIds);

/// XQuery-first SPARQL rewrite: replicates the WHERE pattern per document id
/// under UNION. When the link variable is not selected, every occurrence is
/// replaced by the document-id literal; when it is selected, each replica
/// instead pins the variable with an equality FILTER so the binding survives
/// in the result.
ExtendedQuery rewriteSparqlXqueryFirst(const ExtendedQuery& q,
                                       const Variable& linkVar,
                                       const std::vector<DocumentId>& docIds);

}  // namespace xqfed
