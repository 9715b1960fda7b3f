#pragma once

#include "xqfed/backend.hpp"

namespace xqfed {

/// SPARQL 1.1 Protocol client: query via POST, results parsed from the
/// standard SPARQL JSON results format.
class HttpSparqlBackend : public SparqlBackend {
public:
  explicit HttpSparqlBackend(BackendConfig config);

protected:
  BindingTable doSelect(const std::string& queryText,
                        const CancelToken& cancel) override;
};

/// XML DB REST client. Two adapter profiles: XQuery text as the request body
/// (eXist-db style) or as a form field (selected in the backend config).
/// Enumerated bare document ids are dispatched as doc(...) calls and FLWR
/// keywords are lowercased for standards-conforming processors.
class HttpXmlBackend : public XmlBackend {
public:
  explicit HttpXmlBackend(BackendConfig config);

  long countDocuments() override;

protected:
  XmlResultSequence doEval(const std::string& queryText,
                           const CancelToken& cancel) override;

private:
  std::string post(const std::string& body);
};

/// Parses the W3C SPARQL JSON results format into a BindingTable.
BindingTable parseSparqlJsonResults(const std::string& body);

/// Canonical FLWR text to dispatch form: clause keywords lowercased and bare
/// enumerated document ids wrapped in doc(...) calls.
std::string toDispatchXquery(const std::string& canonicalText);

}  // namespace xqfed
