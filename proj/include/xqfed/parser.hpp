#pragma once

#include <map>
#include <string>

#include "xqfed/ast.hpp"

namespace xqfed {

/// Namespace prefix bindings used to expand prefixed names at parse time and
/// re-compact IRIs at serialization time.
using PrefixMap = std::map<std::string, std::string>;

/// Prefixes used throughout the bundled queries: rdf, owl, ex, dbo, xs.
PrefixMap defaultPrefixes();

/// The (SPARQL instance, XQuery instance, link variable) triple produced by
/// decomposing a hybrid query.
struct DecomposedQuery {
  ExtendedQuery sparqlInstance;  // XQueryFILTER removed
  FlwrQuery xqueryInstance;
  Variable linkVariable;
};

/// Parses extended-SPARQL text. XQueryFILTER ( ... ) is recognized wherever
/// FILTER is legal at the top-level group; the body is parsed as a FLWR query
/// and validated (single SPARQL variable, boolean RETURN, link variable bound
/// by the surrounding triples).
ExtendedQuery parseExtendedQuery(const std::string& text,
                                 const PrefixMap& prefixes = defaultPrefixes());

/// Parses a FLWR query (FOR*, LET*, WHERE?, RETURN), or the count(...) probe
/// wrapper around one.
FlwrQuery parseFlwr(const std::string& text);

/// Splits a hybrid query into its SPARQL and XQuery instances plus the link
/// variable. Throws MediatorError{NoXQueryFilter} when the query has no
/// XQueryFILTER clause.
DecomposedQuery decompose(const ExtendedQuery& q);

}  // namespace xqfed
