#include "xqfed/xml_dom.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xqfed/errors.hpp"

namespace xqfed {

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw MediatorError(ErrorCode::BackendFailure, Stage::Backend,
                      "malformed XML: " + what);
}

std::string escapeText(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct XmlCursor {
  const std::string& text;
  std::size_t pos = 0;

  bool eof() const { return pos >= text.size(); }
  char peek(std::size_t k = 0) const {
    return pos + k < text.size() ? text[pos + k] : '\0';
  }
  bool startsWith(const char* s) const {
    return text.compare(pos, std::char_traits<char>::length(s), s) == 0;
  }
  void skipWs() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
  }
};

std::string decodeEntities(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    if (raw[i] == '&') {
      auto semi = raw.find(';', i);
      if (semi != std::string::npos && semi - i <= 5) {
        std::string name = raw.substr(i + 1, semi - i - 1);
        if (name == "lt") { out.push_back('<'); i = semi + 1; continue; }
        if (name == "gt") { out.push_back('>'); i = semi + 1; continue; }
        if (name == "amp") { out.push_back('&'); i = semi + 1; continue; }
        if (name == "quot") { out.push_back('"'); i = semi + 1; continue; }
        if (name == "apos") { out.push_back('\''); i = semi + 1; continue; }
      }
    }
    out.push_back(raw[i++]);
  }
  return out;
}

std::string parseName(XmlCursor& c) {
  std::string name;
  while (!c.eof()) {
    char ch = c.peek();
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' ||
        ch == '-' || ch == ':' || ch == '.') {
      name.push_back(ch);
      ++c.pos;
    } else {
      break;
    }
  }
  if (name.empty()) malformed("element name expected");
  return name;
}

void skipMisc(XmlCursor& c) {
  while (true) {
    c.skipWs();
    if (c.startsWith("<?")) {
      auto end = c.text.find("?>", c.pos);
      if (end == std::string::npos) malformed("unterminated processing instruction");
      c.pos = end + 2;
    } else if (c.startsWith("<!--")) {
      auto end = c.text.find("-->", c.pos);
      if (end == std::string::npos) malformed("unterminated comment");
      c.pos = end + 3;
    } else if (c.startsWith("<!")) {
      auto end = c.text.find('>', c.pos);
      if (end == std::string::npos) malformed("unterminated declaration");
      c.pos = end + 1;
    } else {
      break;
    }
  }
}

XmlNode parseElement(XmlCursor& c) {
  if (c.peek() != '<') malformed("'<' expected");
  ++c.pos;
  XmlNode node;
  node.name = parseName(c);
  // attributes
  while (true) {
    c.skipWs();
    if (c.startsWith("/>")) {
      c.pos += 2;
      return node;
    }
    if (c.peek() == '>') {
      ++c.pos;
      break;
    }
    std::string attr = parseName(c);
    c.skipWs();
    if (c.peek() != '=') malformed("'=' expected after attribute name");
    ++c.pos;
    c.skipWs();
    char quote = c.peek();
    if (quote != '"' && quote != '\'') malformed("quoted attribute value expected");
    ++c.pos;
    std::string value;
    while (!c.eof() && c.peek() != quote) value.push_back(c.text[c.pos++]);
    if (c.eof()) malformed("unterminated attribute value");
    ++c.pos;
    node.attributes.emplace_back(attr, decodeEntities(value));
  }
  // content
  while (true) {
    if (c.eof()) malformed("unterminated element <" + node.name + ">");
    if (c.startsWith("</")) {
      c.pos += 2;
      std::string closing = parseName(c);
      if (closing != node.name)
        malformed("mismatched closing tag </" + closing + ">");
      c.skipWs();
      if (c.peek() != '>') malformed("'>' expected in closing tag");
      ++c.pos;
      return node;
    }
    if (c.startsWith("<!--")) {
      auto end = c.text.find("-->", c.pos);
      if (end == std::string::npos) malformed("unterminated comment");
      c.pos = end + 3;
      continue;
    }
    if (c.peek() == '<') {
      node.children.push_back(parseElement(c));
      continue;
    }
    std::string chunk;
    while (!c.eof() && c.peek() != '<') chunk.push_back(c.text[c.pos++]);
    node.text += decodeEntities(chunk);
  }
}

/// Trims leading/trailing whitespace of accumulated text fields recursively.
void trimText(XmlNode& node) {
  auto isWs = [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); };
  std::size_t b = 0, e = node.text.size();
  while (b < e && isWs(node.text[b])) ++b;
  while (e > b && isWs(node.text[e - 1])) --e;
  node.text = node.text.substr(b, e - b);
  for (auto& child : node.children) trimText(child);
}

}  // namespace

std::string XmlNode::stringValue() const {
  std::string out = text;
  for (const auto& child : children) {
    std::string inner = child.stringValue();
    if (!out.empty() && !inner.empty()) out += " ";
    out += inner;
  }
  return out;
}

std::string XmlNode::serialize() const {
  std::string out = "<" + name;
  for (const auto& [k, v] : attributes) out += " " + k + "=\"" + escapeText(v) + "\"";
  if (children.empty() && text.empty()) return out + "/>";
  out += ">";
  out += escapeText(text);
  for (const auto& child : children) out += child.serialize();
  return out + "</" + name + ">";
}

XmlNode parseXml(const std::string& text) {
  XmlCursor c{text};
  skipMisc(c);
  XmlNode root = parseElement(c);
  skipMisc(c);
  if (!c.eof()) malformed("trailing content after document element");
  trimText(root);
  return root;
}

std::vector<std::string> parseXmlSequence(const std::string& body) {
  std::vector<std::string> items;
  XmlCursor c{body};
  while (true) {
    skipMisc(c);
    if (c.eof()) break;
    if (c.peek() == '<') {
      XmlNode node = parseElement(c);
      trimText(node);
      items.push_back(node.serialize());
    } else {
      std::string word;
      while (!c.eof() && c.peek() != '<' &&
             !std::isspace(static_cast<unsigned char>(c.peek())))
        word.push_back(c.text[c.pos++]);
      items.push_back(decodeEntities(word));
    }
  }
  return items;
}

void XmlDocStore::add(std::string id, XmlNode root) {
  docs_[std::move(id)] = std::move(root);
}

const XmlNode* XmlDocStore::find(const std::string& id) const {
  auto it = docs_.find(id);
  return it == docs_.end() ? nullptr : &it->second;
}

XmlDocStore XmlDocStore::loadDirectory(const std::string& path) {
  XmlDocStore store;
  namespace fs = std::filesystem;
  if (!fs::is_directory(path))
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "XML fixture directory not found: " + path);
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path());
    std::stringstream buf;
    buf << in.rdbuf();
    store.add(entry.path().filename().string(), parseXml(buf.str()));
  }
  return store;
}

}  // namespace xqfed
