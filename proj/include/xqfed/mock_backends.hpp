#pragma once

#include "xqfed/backend.hpp"
#include "xqfed/parser.hpp"
#include "xqfed/triple_store.hpp"
#include "xqfed/xml_dom.hpp"

namespace xqfed {

/// In-process SPARQL engine over a seeded quad store. Evaluates exactly the
/// parser's subset (BGP, FILTER, UNION, SERVICE-as-local-named-graph, COUNT
/// probes) and fails loudly on anything else. Simulated latency charges
/// fixedMs + perRowMs x matched rows.
class MockSparqlBackend : public SparqlBackend {
public:
  MockSparqlBackend(BackendConfig config, TripleStore store,
                    PrefixMap prefixes = defaultPrefixes());

  const TripleStore& store() const { return store_; }
  double lastSimulatedDelayMs() const { return lastDelayMs_.load(); }

protected:
  BindingTable doSelect(const std::string& queryText,
                        const CancelToken& cancel) override;

private:
  TripleStore store_;
  PrefixMap prefixes_;
  std::atomic<double> lastDelayMs_{0};
};

/// In-process XQuery engine over a seeded document store. Evaluates the FLWR
/// subset (paths with predicates, contains, xs:date comparison, base-uri,
/// collection, doc, element constructors, count probes). Simulated latency
/// charges fixedMs + perRowMs x documents evaluated.
class MockXmlBackend : public XmlBackend {
public:
  MockXmlBackend(BackendConfig config, XmlDocStore docs);

  const XmlDocStore& docs() const { return docs_; }
  double lastSimulatedDelayMs() const { return lastDelayMs_.load(); }

  long countDocuments() override;

protected:
  XmlResultSequence doEval(const std::string& queryText,
                           const CancelToken& cancel) override;

private:
  XmlDocStore docs_;
  std::atomic<double> lastDelayMs_{0};
};

}  // namespace xqfed
