#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "xqfed/ast.hpp"

namespace xqfed {

/// Identifier of an XML document; equality is exact string match.
struct DocumentId {
  std::string uri;

  auto operator<=>(const DocumentId&) const = default;
};

/// Result of a SPARQL-first pushdown query: one (document, boolean) entry per
/// evaluated document.
struct XQueryTupleResult {
  struct Entry {
    DocumentId doc;
    bool value = false;

    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> entries;
};

/// A bag of solution mappings. Rows align with `variables`; duplicates are
/// preserved (SPARQL solution-multiset semantics).
struct BindingTable {
  std::vector<Variable> variables;
  std::vector<std::vector<RdfTerm>> rows;

  std::optional<std::size_t> columnIndex(const Variable& v) const;
  void addRow(std::vector<RdfTerm> row);

  bool operator==(const BindingTable&) const = default;
};

/// Projects a table to the given variables, preserving row order and
/// multiplicity. Throws MediatorError{JoinKeyMissing} when a variable is
/// absent from the header.
BindingTable project(const BindingTable& table, const std::vector<Variable>& vars);

/// True when both tables have the same header and the same rows as bags.
bool bagEqual(const BindingTable& a, const BindingTable& b);

}  // namespace xqfed
