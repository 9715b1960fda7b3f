#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "xqfed/ast.hpp"

namespace xqfed {

/// An in-memory quad bag with a per-graph predicate index. Graph "" is the
/// default graph; SERVICE patterns evaluate against the graph named by the
/// endpoint IRI.
class TripleStore {
public:
  struct Quad {
    RdfTerm subject;
    RdfTerm predicate;
    RdfTerm object;
  };

  void add(const std::string& graph, RdfTerm s, RdfTerm p, RdfTerm o);

  /// Indexes of candidate quads in `graph` for the given bound positions
  /// (null = unbound). Uses the most selective of the (p,s), (p,o), (p)
  /// indexes, falling back to the full graph.
  std::vector<std::size_t> candidates(const std::string& graph, const RdfTerm* s,
                                      const RdfTerm* p, const RdfTerm* o) const;

  const Quad& quad(std::size_t index) const { return quads_[index]; }
  std::size_t size() const { return quads_.size(); }

  /// Line-delimited quad file: N-Quads-style terms, optional graph, optional
  /// trailing '.'; '#' starts a comment line.
  static TripleStore loadFile(const std::string& path);
  static TripleStore parse(const std::string& text);

private:
  std::vector<Quad> quads_;
  // graph -> predicate key -> quad indexes; "" predicate key = all of graph
  std::unordered_map<std::string, std::unordered_map<std::string, std::vector<std::size_t>>> index_;
};

/// Canonical index/equality key of a term (kind-tagged lexical form).
std::string termKey(const RdfTerm& t);

}  // namespace xqfed
