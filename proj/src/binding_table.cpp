#include "xqfed/binding_table.hpp"

#include <algorithm>
#include <cassert>

#include "xqfed/errors.hpp"

namespace xqfed {

std::optional<std::size_t> BindingTable::columnIndex(const Variable& v) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i] == v) return i;
  return std::nullopt;
}

void BindingTable::addRow(std::vector<RdfTerm> row) {
  assert(row.size() == variables.size());
  rows.push_back(std::move(row));
}

BindingTable project(const BindingTable& table,
                     const std::vector<Variable>& vars) {
  std::vector<std::size_t> indexes;
  indexes.reserve(vars.size());
  for (const auto& v : vars) {
    auto idx = table.columnIndex(v);
    if (!idx)
      throw MediatorError(ErrorCode::JoinKeyMissing, Stage::Join,
                          "projection variable ?" + v.name +
                              " missing from result header");
    indexes.push_back(*idx);
  }
  BindingTable out;
  out.variables = vars;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::vector<RdfTerm> projected;
    projected.reserve(indexes.size());
    for (auto i : indexes) projected.push_back(row[i]);
    out.rows.push_back(std::move(projected));
  }
  return out;
}

bool bagEqual(const BindingTable& a, const BindingTable& b) {
  if (a.variables != b.variables) return false;
  if (a.rows.size() != b.rows.size()) return false;
  auto sortedRows = [](const BindingTable& t) {
    auto rows = t.rows;
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  return sortedRows(a) == sortedRows(b);
}

}  // namespace xqfed
