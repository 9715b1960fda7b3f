#pragma once

// Test-side oracles, deliberately independent of the production engines:
// straightforward nested-loop evaluation without indexes, joins or rewrites.

#include <string>

#include "xqfed/ast.hpp"
#include "xqfed/binding_table.hpp"
#include "xqfed/triple_store.hpp"
#include "xqfed/xml_dom.hpp"

namespace xqfed::testing {

/// Nested-loop evaluation of a (filter-free of XQueryFILTER) query against a
/// quad store. Scans every quad of the graph for every pattern.
BindingTable bruteSparql(const ExtendedQuery& q, const TripleStore& store);

/// Boolean verdict of an XQueryFILTER body for one document binding,
/// evaluated by direct recursive interpretation.
bool bruteFilterVerdict(const FlwrQuery& body, const Variable& linkVar,
                        const std::string& docId, const XmlDocStore& docs);

/// Direct semantics of the hybrid query: evaluate the SPARQL part by nested
/// loops, then keep rows whose link binding satisfies the XQuery condition.
BindingTable bruteHybrid(const ExtendedQuery& q, const TripleStore& store,
                         const XmlDocStore& docs);

}  // namespace xqfed::testing
