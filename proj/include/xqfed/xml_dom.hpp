#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace xqfed {

/// Minimal XML element tree for the mock XML database and result parsing.
/// Text content is stored per element as the concatenation of its direct
/// text chunks; mixed-content ordering is not preserved (sufficient for the
/// data-shaped documents this mediator handles).
struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<XmlNode> children;
  std::string text;

  /// Concatenated text of this element and all descendants.
  std::string stringValue() const;

  std::string serialize() const;
};

/// Parses one XML document (prolog and comments skipped, the five standard
/// entities decoded). Throws MediatorError{BackendFailure} on malformed input.
XmlNode parseXml(const std::string& text);

/// Parses a response body that contains a whitespace-separated sequence of
/// XML fragments and/or bare strings, as REST XQuery endpoints return.
std::vector<std::string> parseXmlSequence(const std::string& body);

/// Documents keyed by DocumentId string; iteration order is the key order.
class XmlDocStore {
public:
  void add(std::string id, XmlNode root);
  const XmlNode* find(const std::string& id) const;
  std::size_t size() const { return docs_.size(); }
  const std::map<std::string, XmlNode>& all() const { return docs_; }

  /// Loads every regular file in a directory as a document keyed by filename.
  static XmlDocStore loadDirectory(const std::string& path);

private:
  std::map<std::string, XmlNode> docs_;
};

}  // namespace xqfed
