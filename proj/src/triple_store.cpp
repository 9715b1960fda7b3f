#include "xqfed/triple_store.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "xqfed/errors.hpp"

namespace xqfed {

namespace {

[[noreturn]] void badFixture(int line, const std::string& what) {
  throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                      "triple fixture line " + std::to_string(line) + ": " + what);
}

struct TermToken {
  std::string raw;
};

std::vector<std::string> splitTerms(const std::string& line, int lineNo) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto isWs = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && isWs(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    char c = line[i];
    if (c == '<') {
      while (i < line.size() && line[i] != '>') ++i;
      if (i >= line.size()) badFixture(lineNo, "unterminated IRI");
      ++i;
    } else if (c == '"' || c == '\'') {
      char q = c;
      ++i;
      while (i < line.size()) {
        if (line[i] == '\\') { i += 2; continue; }
        if (line[i] == q) break;
        ++i;
      }
      if (i >= line.size()) badFixture(lineNo, "unterminated literal");
      ++i;
      // optional ^^<dt> or @lang suffix, attached without spaces
      if (i + 1 < line.size() && line[i] == '^' && line[i + 1] == '^') {
        i += 2;
        if (i < line.size() && line[i] == '<') {
          while (i < line.size() && line[i] != '>') ++i;
          if (i >= line.size()) badFixture(lineNo, "unterminated datatype IRI");
          ++i;
        } else {
          while (i < line.size() && !isWs(line[i])) ++i;
        }
      } else if (i < line.size() && line[i] == '@') {
        while (i < line.size() && !isWs(line[i])) ++i;
      }
    } else {
      while (i < line.size() && !isWs(line[i])) ++i;
    }
    out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char n = s[++i];
      switch (n) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: out.push_back(n);
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

RdfTerm parseTerm(const std::string& raw, int lineNo) {
  if (raw.empty()) badFixture(lineNo, "empty term");
  if (raw.front() == '<' && raw.back() == '>') {
    std::string iri = raw.substr(1, raw.size() - 2);
    if (iri.empty() || iri.find_first_of(" \t") != std::string::npos)
      badFixture(lineNo, "IRIs must be non-empty and whitespace-free");
    return RdfTerm::iri(std::move(iri));
  }
  if (raw.rfind("_:", 0) == 0) {
    RdfTerm t;
    t.kind = RdfTerm::Kind::BlankNode;
    t.lexical = raw.substr(2);
    return t;
  }
  if (raw.front() == '"' || raw.front() == '\'') {
    char q = raw.front();
    auto close = raw.rfind(q);
    if (close == 0) badFixture(lineNo, "unterminated literal");
    RdfTerm t = RdfTerm::literal(unescape(raw.substr(1, close - 1)));
    std::string suffix = raw.substr(close + 1);
    if (suffix.rfind("^^<", 0) == 0 && suffix.back() == '>')
      t.datatypeIri = suffix.substr(3, suffix.size() - 4);
    else if (suffix.rfind("^^", 0) == 0)
      t.datatypeIri = suffix.substr(2);
    else if (!suffix.empty() && suffix.front() == '@')
      t.langTag = suffix.substr(1);
    else if (!suffix.empty())
      badFixture(lineNo, "unexpected literal suffix '" + suffix + "'");
    return t;
  }
  bool numeric = true;
  bool decimal = false;
  for (char c : raw) {
    if (c == '.') decimal = true;
    else if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-') numeric = false;
  }
  if (numeric)
    return RdfTerm::typedLiteral(
        raw, decimal ? "http://www.w3.org/2001/XMLSchema#decimal"
                     : "http://www.w3.org/2001/XMLSchema#integer");
  badFixture(lineNo, "unrecognized term '" + raw + "'");
}

}  // namespace

std::string termKey(const RdfTerm& t) {
  std::string key;
  switch (t.kind) {
    case RdfTerm::Kind::Iri: key = "I"; break;
    case RdfTerm::Kind::Literal: key = "L"; break;
    case RdfTerm::Kind::BlankNode: key = "B"; break;
  }
  key += t.lexical;
  if (t.datatypeIri) key += "^^" + *t.datatypeIri;
  if (t.langTag) key += "@" + *t.langTag;
  return key;
}

void TripleStore::add(const std::string& graph, RdfTerm s, RdfTerm p, RdfTerm o) {
  std::size_t idx = quads_.size();
  auto& byKey = index_[graph];
  std::string pk = termKey(p);
  byKey["P:" + pk].push_back(idx);
  byKey["PS:" + pk + "\x1f" + termKey(s)].push_back(idx);
  byKey["PO:" + pk + "\x1f" + termKey(o)].push_back(idx);
  byKey[""].push_back(idx);
  quads_.push_back(Quad{std::move(s), std::move(p), std::move(o)});
}

std::vector<std::size_t> TripleStore::candidates(const std::string& graph,
                                                 const RdfTerm* s,
                                                 const RdfTerm* p,
                                                 const RdfTerm* o) const {
  auto g = index_.find(graph);
  if (g == index_.end()) return {};
  std::string key;
  if (p && s) key = "PS:" + termKey(*p) + "\x1f" + termKey(*s);
  else if (p && o) key = "PO:" + termKey(*p) + "\x1f" + termKey(*o);
  else if (p) key = "P:" + termKey(*p);
  auto it = g->second.find(key);
  if (it == g->second.end()) return {};
  return it->second;
}

TripleStore TripleStore::parse(const std::string& text) {
  TripleStore store;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto terms = splitTerms(line, lineNo);
    if (!terms.empty() && terms.back() == ".") terms.pop_back();
    if (terms.size() != 3 && terms.size() != 4)
      badFixture(lineNo, "expected 3 terms plus optional graph");
    std::string graph;
    if (terms.size() == 4) {
      RdfTerm g = parseTerm(terms[3], lineNo);
      if (g.kind != RdfTerm::Kind::Iri) badFixture(lineNo, "graph must be an IRI");
      graph = g.lexical;
    }
    store.add(graph, parseTerm(terms[0], lineNo), parseTerm(terms[1], lineNo),
              parseTerm(terms[2], lineNo));
  }
  return store;
}

TripleStore TripleStore::loadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "triple fixture not found: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace xqfed
