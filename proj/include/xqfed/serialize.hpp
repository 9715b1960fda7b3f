#pragma once

#include <string>

#include "xqfed/ast.hpp"
#include "xqfed/parser.hpp"

namespace xqfed {

// Canonical text forms. Deterministic: equal ASTs produce byte-equal strings.
// Layout rules: one clause per line, single spaces between tokens, no
// indentation, '.' triple terminators, trailing newline.

std::string serialize(const ExtendedQuery& q,
                      const PrefixMap& prefixes = defaultPrefixes());

std::string serialize(const FlwrQuery& q);

/// Canonical text of a single XQuery expression (used by rewrite tests).
std::string serializeExpr(const XqExpr& e);

/// Canonical text of a FILTER expression.
std::string serializeFilterExpr(const FilterExpr& e);

/// Canonical text of one RDF term (prefix-compacted IRIs, quoted literals,
/// bare numerics).
std::string serializeTerm(const RdfTerm& term, const PrefixMap& prefixes);

}  // namespace xqfed
