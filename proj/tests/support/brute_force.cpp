#include "support/brute_force.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

namespace xqfed::testing {

namespace {

// ---------------------------------------------------------------------------
// SPARQL side: nested loops over every quad, rows as name->term maps
// ---------------------------------------------------------------------------

using Row = std::map<std::string, RdfTerm>;

bool unify(const VarOrTerm& pattern, const RdfTerm& value, Row& row) {
  if (const auto* term = std::get_if<RdfTerm>(&pattern)) return *term == value;
  const auto& var = std::get<Variable>(pattern);
  auto it = row.find(var.name);
  if (it != row.end()) return it->second == value;
  row[var.name] = value;
  return true;
}

std::vector<std::size_t> allQuads(const TripleStore& store,
                                  const std::string& graph) {
  return store.candidates(graph, nullptr, nullptr, nullptr);
}

struct FilterValue {
  bool isNum = false;
  double num = 0;
  std::string str;
};

FilterValue filterTermValue(const RdfTerm& t) {
  FilterValue v;
  if (t.isNumeric()) {
    v.isNum = true;
    v.num = std::stod(t.lexical);
  } else {
    v.str = t.lexical;
  }
  return v;
}

FilterValue evalFilterValue(const FilterExpr& e, const Row& row) {
  switch (e.kind) {
    case FilterExpr::Kind::Var: {
      auto it = row.find(e.value);
      if (it == row.end()) throw std::runtime_error("unbound filter variable");
      return filterTermValue(it->second);
    }
    case FilterExpr::Kind::Number: {
      FilterValue v;
      v.isNum = true;
      v.num = std::stod(e.value);
      return v;
    }
    case FilterExpr::Kind::String:
    case FilterExpr::Kind::Iri: {
      FilterValue v;
      v.str = e.value;
      return v;
    }
    case FilterExpr::Kind::Arith: {
      FilterValue a = evalFilterValue(e.args[0], row);
      FilterValue b = evalFilterValue(e.args[1], row);
      FilterValue v;
      v.isNum = true;
      if (e.op == "+") v.num = a.num + b.num;
      else if (e.op == "-") v.num = a.num - b.num;
      else if (e.op == "*") v.num = a.num * b.num;
      else v.num = a.num / b.num;
      return v;
    }
    default:
      throw std::runtime_error("comparison nested in filter operand");
  }
}

bool evalFilterBool(const FilterExpr& e, const Row& row) {
  if (e.kind != FilterExpr::Kind::Compare)
    throw std::runtime_error("filter is not a comparison");
  FilterValue a = evalFilterValue(e.args[0], row);
  FilterValue b = evalFilterValue(e.args[1], row);
  int cmp;
  if (a.isNum && b.isNum) cmp = a.num < b.num ? -1 : (a.num > b.num ? 1 : 0);
  else cmp = a.str < b.str ? -1 : (a.str > b.str ? 1 : 0);
  if (e.op == "=") return cmp == 0;
  if (e.op == "!=") return cmp != 0;
  if (e.op == "<") return cmp < 0;
  if (e.op == "<=") return cmp <= 0;
  if (e.op == ">") return cmp > 0;
  return cmp >= 0;
}

std::vector<Row> evalPattern(const GraphPattern& p, const std::string& graph,
                             const TripleStore& store);

std::vector<Row> joinRows(const std::vector<Row>& a, const std::vector<Row>& b) {
  std::vector<Row> out;
  for (const auto& ra : a) {
    for (const auto& rb : b) {
      bool ok = true;
      Row merged = ra;
      for (const auto& [name, term] : rb) {
        auto it = merged.find(name);
        if (it != merged.end()) {
          if (!(it->second == term)) {
            ok = false;
            break;
          }
        } else {
          merged[name] = term;
        }
      }
      if (ok) out.push_back(std::move(merged));
    }
  }
  return out;
}

std::vector<Row> evalPattern(const GraphPattern& p, const std::string& graph,
                             const TripleStore& store) {
  std::vector<Row> rows{Row{}};
  for (const auto& tp : p.triples) {
    std::vector<Row> next;
    for (const auto& row : rows) {
      for (std::size_t qi : allQuads(store, graph)) {
        const auto& quad = store.quad(qi);
        Row candidate = row;
        if (unify(tp.subject, quad.subject, candidate) &&
            unify(tp.predicate, quad.predicate, candidate) &&
            unify(tp.object, quad.object, candidate))
          next.push_back(std::move(candidate));
      }
    }
    rows = std::move(next);
  }
  for (const auto& svc : p.services) {
    std::vector<Row> sub = evalPattern(svc.inner, svc.endpointIri, store);
    if (svc.hasSubselect) {
      std::vector<Row> projected;
      for (const auto& row : sub) {
        Row keep;
        for (const auto& v : svc.subselectVars) {
          auto it = row.find(v.name);
          if (it == row.end()) throw std::runtime_error("unbound subselect var");
          keep[v.name] = it->second;
        }
        projected.push_back(std::move(keep));
      }
      sub = std::move(projected);
    }
    rows = joinRows(rows, sub);
  }
  if (!p.unions.empty()) {
    std::vector<Row> unionRows;
    for (const auto& branch : p.unions) {
      std::vector<Row> b = evalPattern(branch, graph, store);
      unionRows.insert(unionRows.end(), b.begin(), b.end());
    }
    rows = joinRows(rows, unionRows);
  }
  for (const auto& f : p.filters) {
    std::vector<Row> kept;
    for (const auto& row : rows)
      if (evalFilterBool(f, row)) kept.push_back(row);
    rows = std::move(kept);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// XQuery side: direct recursive interpretation of the FLWR body
// ---------------------------------------------------------------------------

struct Item {
  enum class K { Node, Str, Num, Bool, Date } k = K::Str;
  const XmlNode* node = nullptr;
  std::string str;
  double num = 0;
  bool b = false;
  long date = 0;
};

using Seq = std::vector<Item>;

struct XqEnv {
  const XmlDocStore& docs;
  std::string linkVarName;
  std::string linkVarValue;
  std::map<std::string, Seq> vars;
};

std::optional<long> isoDays(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y, m, d;
  try {
    y = std::stoi(s.substr(0, 4));
    m = std::stoi(s.substr(5, 2));
    d = std::stoi(s.substr(8, 2));
  } catch (...) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{unsigned(m)},
                                  std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string itemStr(const Item& i) {
  switch (i.k) {
    case Item::K::Node: return i.node->stringValue();
    case Item::K::Str: return i.str;
    case Item::K::Num: {
      if (i.num == std::floor(i.num)) return std::to_string((long long)i.num);
      return std::to_string(i.num);
    }
    case Item::K::Bool: return i.b ? "true" : "false";
    case Item::K::Date: return "";
  }
  return "";
}

bool truthy(const Item& i) {
  switch (i.k) {
    case Item::K::Node: return true;
    case Item::K::Str: return !i.str.empty();
    case Item::K::Num: return i.num != 0;
    case Item::K::Bool: return i.b;
    case Item::K::Date: return true;
  }
  return false;
}

bool seqTrue(const Seq& s) {
  for (const auto& i : s)
    if (truthy(i)) return true;
  return false;
}

Seq evalExpr(const XqExpr& e, XqEnv& env, const Item* ctx);

void descendants(const XmlNode* n, const std::string& name, Seq& out) {
  for (const auto& c : n->children) {
    if (name == "*" || c.name == name) {
      Item i;
      i.k = Item::K::Node;
      i.node = &c;
      out.push_back(i);
    }
    descendants(&c, name, out);
  }
}

Seq stepFrom(const Item& base, const XqExpr::Step& step, XqEnv& env) {
  const XmlNode* n = nullptr;
  if (base.k == Item::K::Node) {
    n = base.node;
  } else if (base.k == Item::K::Str) {
    n = env.docs.find(base.str);
    if (!n) return {};
  } else {
    throw std::runtime_error("path over non-node");
  }
  Seq cands;
  if (step.descendant) {
    descendants(n, step.nameTest, cands);
  } else {
    for (const auto& c : n->children)
      if (step.nameTest == "*" || c.name == step.nameTest) {
        Item i;
        i.k = Item::K::Node;
        i.node = &c;
        cands.push_back(i);
      }
  }
  for (const auto& pred : step.predicates) {
    Seq kept;
    if (pred.kind == XqExpr::Kind::NumberLit) {
      std::size_t pos = std::size_t(std::stoul(pred.value));
      if (pos >= 1 && pos <= cands.size()) kept.push_back(cands[pos - 1]);
    } else {
      for (const auto& c : cands)
        if (seqTrue(evalExpr(pred, env, &c))) kept.push_back(c);
    }
    cands = std::move(kept);
  }
  return cands;
}

bool cmpItems(const Item& a, const Item& b, const std::string& op) {
  int cmp;
  if (a.k == Item::K::Date || b.k == Item::K::Date) {
    auto days = [](const Item& i) {
      if (i.k == Item::K::Date) return i.date;
      auto d = isoDays(itemStr(i));
      if (!d) throw std::runtime_error("bad date lexical");
      return *d;
    };
    long da = days(a), db = days(b);
    cmp = da < db ? -1 : (da > db ? 1 : 0);
  } else if (a.k == Item::K::Num || b.k == Item::K::Num) {
    auto num = [](const Item& i) {
      if (i.k == Item::K::Num) return i.num;
      return std::stod(itemStr(i));
    };
    double na = num(a), nb = num(b);
    cmp = na < nb ? -1 : (na > nb ? 1 : 0);
  } else if (a.k == Item::K::Bool || b.k == Item::K::Bool) {
    bool ba = truthy(a), bb = truthy(b);
    cmp = ba == bb ? 0 : (ba ? 1 : -1);
  } else {
    std::string sa = itemStr(a), sb = itemStr(b);
    cmp = sa < sb ? -1 : (sa > sb ? 1 : 0);
  }
  if (op == "=") return cmp == 0;
  if (op == "!=") return cmp != 0;
  if (op == "<") return cmp < 0;
  if (op == "<=") return cmp <= 0;
  if (op == ">") return cmp > 0;
  return cmp >= 0;
}

Seq evalExpr(const XqExpr& e, XqEnv& env, const Item* ctx) {
  switch (e.kind) {
    case XqExpr::Kind::StringLit: {
      Item i;
      i.k = Item::K::Str;
      i.str = e.value;
      return {i};
    }
    case XqExpr::Kind::NumberLit: {
      Item i;
      i.k = Item::K::Num;
      i.num = std::stod(e.value);
      return {i};
    }
    case XqExpr::Kind::XqVarRef: {
      auto it = env.vars.find(e.value);
      if (it == env.vars.end()) throw std::runtime_error("unbound $" + e.value);
      return it->second;
    }
    case XqExpr::Kind::SparqlVarRef: {
      if (e.value != env.linkVarName)
        throw std::runtime_error("unexpected SPARQL variable ?" + e.value);
      Item i;
      i.k = Item::K::Str;
      i.str = env.linkVarValue;
      return {i};
    }
    case XqExpr::Kind::Sequence: {
      Seq out;
      for (const auto& a : e.args) {
        Seq part = evalExpr(a, env, ctx);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    case XqExpr::Kind::Path: {
      Seq current;
      if (e.hasRoot) {
        current = evalExpr(e.args[0], env, ctx);
      } else {
        if (!ctx) throw std::runtime_error("relative path without context");
        current = {*ctx};
      }
      for (const auto& step : e.steps) {
        Seq next;
        for (const auto& item : current) {
          Seq part = stepFrom(item, step, env);
          next.insert(next.end(), part.begin(), part.end());
        }
        current = std::move(next);
      }
      return current;
    }
    case XqExpr::Kind::Compare: {
      Seq lhs = evalExpr(e.args[0], env, ctx);
      Seq rhs = evalExpr(e.args[1], env, ctx);
      for (const auto& a : lhs)
        for (const auto& b : rhs)
          if (cmpItems(a, b, e.value)) {
            Item i;
            i.k = Item::K::Bool;
            i.b = true;
            return {i};
          }
      Item i;
      i.k = Item::K::Bool;
      i.b = false;
      return {i};
    }
    case XqExpr::Kind::BoolOp: {
      bool lhs = seqTrue(evalExpr(e.args[0], env, ctx));
      bool rhs = seqTrue(evalExpr(e.args[1], env, ctx));
      Item i;
      i.k = Item::K::Bool;
      i.b = e.value == "and" ? (lhs && rhs) : (lhs || rhs);
      return {i};
    }
    case XqExpr::Kind::FunctionCall: {
      if (e.value == "doc") {
        Seq ids = evalExpr(e.args[0], env, ctx);
        Seq out;
        for (const auto& id : ids) {
          const XmlNode* n = env.docs.find(itemStr(id));
          if (!n) continue;
          Item i;
          i.k = Item::K::Node;
          i.node = n;
          out.push_back(i);
        }
        return out;
      }
      if (e.value == "contains") {
        Seq hay = evalExpr(e.args[0], env, ctx);
        Seq needle = evalExpr(e.args[1], env, ctx);
        Item i;
        i.k = Item::K::Bool;
        i.b = false;
        if (!needle.empty()) {
          std::string want = itemStr(needle.front());
          for (const auto& h : hay)
            if (itemStr(h).find(want) != std::string::npos) i.b = true;
        }
        return {i};
      }
      if (e.value == "xs:date") {
        Seq arg = evalExpr(e.args[0], env, ctx);
        if (arg.size() != 1) throw std::runtime_error("xs:date arity");
        auto d = isoDays(itemStr(arg[0]));
        if (!d) throw std::runtime_error("bad date");
        Item i;
        i.k = Item::K::Date;
        i.date = *d;
        return {i};
      }
      if (e.value == "count") {
        Item i;
        i.k = Item::K::Num;
        i.num = double(evalExpr(e.args[0], env, ctx).size());
        return {i};
      }
      if (e.value == "exists") {
        Item i;
        i.k = Item::K::Bool;
        i.b = !evalExpr(e.args[0], env, ctx).empty();
        return {i};
      }
      if (e.value == "not") {
        Item i;
        i.k = Item::K::Bool;
        i.b = !seqTrue(evalExpr(e.args[0], env, ctx));
        return {i};
      }
      if (e.value == "true") {
        Item i;
        i.k = Item::K::Bool;
        i.b = true;
        return {i};
      }
      if (e.value == "false") {
        Item i;
        i.k = Item::K::Bool;
        i.b = false;
        return {i};
      }
      throw std::runtime_error("unknown function " + e.value);
    }
    case XqExpr::Kind::ElementCtor:
      throw std::runtime_error("element constructor in filter body");
  }
  throw std::runtime_error("unknown expr");
}

bool evalFlwrTrue(const FlwrQuery& q, XqEnv& env, std::size_t forIndex) {
  if (forIndex < q.forClauses.size()) {
    Seq seq = evalExpr(q.forClauses[forIndex].expr, env, nullptr);
    bool any = false;
    for (const auto& item : seq) {
      auto saved = env.vars;
      env.vars[q.forClauses[forIndex].var] = {item};
      if (evalFlwrTrue(q, env, forIndex + 1)) any = true;
      env.vars = std::move(saved);
      if (any) return true;
    }
    return false;
  }
  auto saved = env.vars;
  for (const auto& let : q.letClauses)
    env.vars[let.var] = evalExpr(let.expr, env, nullptr);
  bool ok = true;
  if (q.whereExpr) ok = seqTrue(evalExpr(*q.whereExpr, env, nullptr));
  bool verdict = ok && seqTrue(evalExpr(q.returnExpr, env, nullptr));
  env.vars = std::move(saved);
  return verdict;
}

}  // namespace

BindingTable bruteSparql(const ExtendedQuery& q, const TripleStore& store) {
  std::vector<Row> rows = evalPattern(q.where, "", store);
  BindingTable out;
  out.variables = q.selectVars;
  for (const auto& row : rows) {
    std::vector<RdfTerm> r;
    for (const auto& v : q.selectVars) {
      auto it = row.find(v.name);
      if (it == row.end()) throw std::runtime_error("unbound select var");
      r.push_back(it->second);
    }
    out.rows.push_back(std::move(r));
  }
  return out;
}

bool bruteFilterVerdict(const FlwrQuery& body, const Variable& linkVar,
                        const std::string& docId, const XmlDocStore& docs) {
  XqEnv env{docs, linkVar.name, docId, {}};
  return evalFlwrTrue(body, env, 0);
}

BindingTable bruteHybrid(const ExtendedQuery& q, const TripleStore& store,
                         const XmlDocStore& docs) {
  if (q.where.xqueryFilters.empty()) return bruteSparql(q, store);
  const XQueryFilterClause& clause = q.where.xqueryFilters.front();

  ExtendedQuery sparqlPart = q;
  sparqlPart.where.xqueryFilters.clear();
  // evaluate with the link variable visible, then filter and project
  ExtendedQuery widened = sparqlPart;
  bool linkSelected = false;
  for (const auto& v : widened.selectVars)
    if (v == clause.linkVariable) linkSelected = true;
  if (!linkSelected) widened.selectVars.push_back(clause.linkVariable);

  BindingTable all = bruteSparql(widened, store);
  std::size_t linkIdx = *all.columnIndex(clause.linkVariable);

  BindingTable kept;
  kept.variables = all.variables;
  std::map<std::string, bool> verdictCache;
  for (const auto& row : all.rows) {
    const std::string& docId = row[linkIdx].lexical;
    auto it = verdictCache.find(docId);
    if (it == verdictCache.end())
      it = verdictCache
               .emplace(docId, bruteFilterVerdict(clause.body,
                                                  clause.linkVariable, docId, docs))
               .first;
    if (it->second) kept.rows.push_back(row);
  }
  return project(kept, q.selectVars);
}

}  // namespace xqfed::testing
