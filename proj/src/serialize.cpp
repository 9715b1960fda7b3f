#include "xqfed/serialize.hpp"

#include <cctype>

namespace xqfed {

namespace {

std::string escapeQuoted(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('\'');
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

bool isLocalNameChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.';
}

std::string compactIri(const std::string& iri, const PrefixMap& prefixes) {
  const std::string* bestNs = nullptr;
  const std::string* bestPrefix = nullptr;
  for (const auto& [prefix, ns] : prefixes) {
    if (ns.empty() || iri.size() <= ns.size()) continue;
    if (iri.compare(0, ns.size(), ns) != 0) continue;
    std::string_view local(iri.data() + ns.size(), iri.size() - ns.size());
    bool ok = !local.empty() && local.back() != '.';
    for (char c : local)
      if (!isLocalNameChar(c)) ok = false;
    if (!ok) continue;
    if (!bestNs || ns.size() > bestNs->size() ||
        (ns.size() == bestNs->size() && prefix < *bestPrefix)) {
      bestNs = &ns;
      bestPrefix = &prefix;
    }
  }
  if (bestNs) return *bestPrefix + ":" + iri.substr(bestNs->size());
  return "<" + iri + ">";
}

// --------------------------------------------------------------------------
// XQuery expressions
// --------------------------------------------------------------------------

int xqPrec(const XqExpr& e) {
  switch (e.kind) {
    case XqExpr::Kind::BoolOp: return e.value == "or" ? 1 : 2;
    case XqExpr::Kind::Compare: return 3;
    default: return 4;
  }
}

std::string xqToString(const XqExpr& e);

std::string xqChild(const XqExpr& child, int parentPrec, bool rightSide) {
  int p = xqPrec(child);
  bool needParens = rightSide ? p <= parentPrec : p < parentPrec;
  if (parentPrec == 4) needParens = p < 4;  // path roots: any operator nests
  std::string s = xqToString(child);
  return needParens ? "(" + s + ")" : s;
}

std::string xqSteps(const std::vector<XqExpr::Step>& steps, bool rooted) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& st = steps[i];
    if (i > 0 || rooted) out += st.descendant ? "//" : "/";
    else if (st.descendant) out += "//";
    out += st.nameTest;
    for (const auto& p : st.predicates) out += "[" + xqToString(p) + "]";
  }
  return out;
}

std::string xqToString(const XqExpr& e) {
  switch (e.kind) {
    case XqExpr::Kind::StringLit: return escapeQuoted(e.value);
    case XqExpr::Kind::NumberLit: return e.value;
    case XqExpr::Kind::XqVarRef: return "$" + e.value;
    case XqExpr::Kind::SparqlVarRef: return "?" + e.value;
    case XqExpr::Kind::FunctionCall: {
      std::string out = e.value + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += xqToString(e.args[i]);
      }
      return out + ")";
    }
    case XqExpr::Kind::Compare:
      return xqChild(e.args[0], 3, false) + " " + e.value + " " +
             xqChild(e.args[1], 3, true);
    case XqExpr::Kind::BoolOp: {
      int p = xqPrec(e);
      return xqChild(e.args[0], p, false) + " " + e.value + " " +
             xqChild(e.args[1], p, true);
    }
    case XqExpr::Kind::Path: {
      std::string out;
      if (e.hasRoot) out = xqChild(e.args[0], 4, false);
      out += xqSteps(e.steps, e.hasRoot);
      return out;
    }
    case XqExpr::Kind::Sequence: {
      std::string out = "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += xqToString(e.args[i]);
      }
      return out + ")";
    }
    case XqExpr::Kind::ElementCtor: {
      std::string out = "<" + e.value + ">";
      for (const auto& child : e.args) {
        if (child.kind == XqExpr::Kind::ElementCtor)
          out += xqToString(child);
        else
          out += "{" + xqToString(child) + "}";
      }
      return out + "</" + e.value + ">";
    }
  }
  return "";
}

void flwrLines(const FlwrQuery& q, std::vector<std::string>& lines) {
  if (q.countWrapped) lines.push_back("count(");
  for (const auto& c : q.forClauses)
    lines.push_back("FOR $" + c.var + " in " + xqToString(c.expr));
  for (const auto& c : q.letClauses)
    lines.push_back("LET $" + c.var + " := " + xqToString(c.expr));
  if (q.whereExpr) lines.push_back("WHERE " + xqToString(*q.whereExpr));
  lines.push_back("RETURN " + xqToString(q.returnExpr));
  if (q.countWrapped) lines.push_back(")");
}

// --------------------------------------------------------------------------
// SPARQL
// --------------------------------------------------------------------------

int filterPrec(const FilterExpr& e) {
  switch (e.kind) {
    case FilterExpr::Kind::Compare: return 1;
    case FilterExpr::Kind::Arith: return e.op == "+" || e.op == "-" ? 2 : 3;
    default: return 4;
  }
}

std::string filterToString(const FilterExpr& e, const PrefixMap& prefixes);

std::string filterChild(const FilterExpr& child, int parentPrec, bool rightSide,
                        const PrefixMap& prefixes) {
  int p = filterPrec(child);
  bool needParens = rightSide ? p <= parentPrec : p < parentPrec;
  std::string s = filterToString(child, prefixes);
  return needParens ? "( " + s + " )" : s;
}

std::string filterToString(const FilterExpr& e, const PrefixMap& prefixes) {
  switch (e.kind) {
    case FilterExpr::Kind::Var: return "?" + e.value;
    case FilterExpr::Kind::Number: return e.value;
    case FilterExpr::Kind::String: return escapeQuoted(e.value);
    case FilterExpr::Kind::Iri: return compactIri(e.value, prefixes);
    case FilterExpr::Kind::Compare:
      return filterChild(e.args[0], 1, false, prefixes) + " " + e.op + " " +
             filterChild(e.args[1], 1, true, prefixes);
    case FilterExpr::Kind::Arith: {
      int p = filterPrec(e);
      return filterChild(e.args[0], p, false, prefixes) + " " + e.op + " " +
             filterChild(e.args[1], p, true, prefixes);
    }
  }
  return "";
}

std::string termToString(const VarOrTerm& t, const PrefixMap& prefixes) {
  if (const auto* v = std::get_if<Variable>(&t)) return "?" + v->name;
  return serializeTerm(std::get<RdfTerm>(t), prefixes);
}

void patternLines(const GraphPattern& p, const PrefixMap& prefixes,
                  std::vector<std::string>& lines);

void serviceLines(const ServiceBlock& s, const PrefixMap& prefixes,
                  std::vector<std::string>& lines) {
  lines.push_back("SERVICE <" + s.endpointIri + "> {");
  if (s.hasSubselect) {
    std::string sel = "SELECT";
    for (const auto& v : s.subselectVars) sel += " ?" + v.name;
    lines.push_back(sel);
    lines.push_back("WHERE {");
    patternLines(s.inner, prefixes, lines);
    lines.push_back("}");
  } else {
    patternLines(s.inner, prefixes, lines);
  }
  lines.push_back("}");
}

void patternLines(const GraphPattern& p, const PrefixMap& prefixes,
                  std::vector<std::string>& lines) {
  for (const auto& t : p.triples)
    lines.push_back(termToString(t.subject, prefixes) + " " +
                    termToString(t.predicate, prefixes) + " " +
                    termToString(t.object, prefixes) + " .");
  for (const auto& s : p.services) serviceLines(s, prefixes, lines);
  for (std::size_t i = 0; i < p.unions.size(); ++i) {
    if (i) lines.push_back("UNION");
    lines.push_back("{");
    patternLines(p.unions[i], prefixes, lines);
    lines.push_back("}");
  }
  for (const auto& f : p.filters)
    lines.push_back("FILTER ( " + filterToString(f, prefixes) + " ) .");
  for (const auto& x : p.xqueryFilters) {
    lines.push_back("XQueryFILTER (");
    flwrLines(x.body, lines);
    lines.push_back(") .");
  }
}

std::string joinLines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace

std::string serializeTerm(const RdfTerm& term, const PrefixMap& prefixes) {
  switch (term.kind) {
    case RdfTerm::Kind::Iri: return compactIri(term.lexical, prefixes);
    case RdfTerm::Kind::BlankNode: return "_:" + term.lexical;
    case RdfTerm::Kind::Literal: {
      if (term.isNumeric()) return term.lexical;
      std::string out = escapeQuoted(term.lexical);
      if (term.langTag) return out + "@" + *term.langTag;
      if (term.datatypeIri) return out + "^^" + compactIri(*term.datatypeIri, prefixes);
      return out;
    }
  }
  return "";
}

std::string serializeExpr(const XqExpr& e) { return xqToString(e); }

std::string serializeFilterExpr(const FilterExpr& e) {
  return filterToString(e, defaultPrefixes());
}

std::string serialize(const FlwrQuery& q) {
  std::vector<std::string> lines;
  flwrLines(q, lines);
  return joinLines(lines);
}

std::string serialize(const ExtendedQuery& q, const PrefixMap& prefixes) {
  std::vector<std::string> lines;
  if (q.countProbe) {
    lines.push_back("SELECT ( COUNT(*) AS ?" + q.selectVars.front().name + " )");
  } else {
    std::string sel = "SELECT";
    for (const auto& v : q.selectVars) sel += " ?" + v.name;
    lines.push_back(sel);
  }
  lines.push_back("WHERE {");
  patternLines(q.where, prefixes, lines);
  lines.push_back("}");
  return joinLines(lines);
}

}  // namespace xqfed
