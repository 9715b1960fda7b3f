#pragma once

#include <string>
#include <vector>

#include "xqfed/binding_table.hpp"
#include "xqfed/config.hpp"
#include "xqfed/executor.hpp"

namespace xqfed {

/// CLI entry point (run | explain | bench | catalog). Returns the process
/// exit code: 0 success, 1 config/usage, 2 parse, 3 plan, 4 backend,
/// 5 join/merge.
int cliMain(const std::vector<std::string>& args);

/// Result table in the configured output format. json-results is the
/// standard SPARQL JSON results format and is byte-stable for equal inputs.
std::string formatResults(const BindingTable& table, OutputFormat format,
                          const PrefixMap& prefixes);

/// Machine-readable explain record (schema documented in the README).
std::string explainJson(const ExplainReport& report);

}  // namespace xqfed
