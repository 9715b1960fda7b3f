#include <algorithm>
#include <unordered_map>

#include "xqfed/errors.hpp"
#include "xqfed/mock_backends.hpp"

namespace xqfed {

namespace {

[[noreturn]] void unsupported(const std::string& what) {
  throw MediatorError(ErrorCode::UnsupportedFeature, Stage::Backend,
                      "mock SPARQL engine: " + what);
}

/// Typed value for FILTER evaluation.
struct Value {
  enum class Kind { Num, Str, Bool } kind = Kind::Str;
  double num = 0;
  std::string str;
  bool boolean = false;
};

bool parseNumber(const std::string& lexical, double& out) {
  if (lexical.empty()) return false;
  char* end = nullptr;
  out = std::strtod(lexical.c_str(), &end);
  return end == lexical.c_str() + lexical.size();
}

Value termValue(const RdfTerm& t) {
  Value v;
  if (t.isNumeric()) {
    v.kind = Value::Kind::Num;
    if (!parseNumber(t.lexical, v.num)) unsupported("bad numeric literal");
    return v;
  }
  v.kind = Value::Kind::Str;
  v.str = t.lexical;
  return v;
}

Value evalFilter(const FilterExpr& e, const BindingTable& table,
                 const std::vector<RdfTerm>& row) {
  switch (e.kind) {
    case FilterExpr::Kind::Var: {
      auto idx = table.columnIndex(Variable{e.value});
      if (!idx) unsupported("filter references unbound variable ?" + e.value);
      return termValue(row[*idx]);
    }
    case FilterExpr::Kind::Number: {
      Value v;
      v.kind = Value::Kind::Num;
      parseNumber(e.value, v.num);
      return v;
    }
    case FilterExpr::Kind::String: {
      Value v;
      v.kind = Value::Kind::Str;
      v.str = e.value;
      return v;
    }
    case FilterExpr::Kind::Iri: {
      Value v;
      v.kind = Value::Kind::Str;
      v.str = e.value;
      return v;
    }
    case FilterExpr::Kind::Arith: {
      Value a = evalFilter(e.args[0], table, row);
      Value b = evalFilter(e.args[1], table, row);
      if (a.kind != Value::Kind::Num || b.kind != Value::Kind::Num)
        unsupported("arithmetic on non-numeric operands");
      Value v;
      v.kind = Value::Kind::Num;
      if (e.op == "+") v.num = a.num + b.num;
      else if (e.op == "-") v.num = a.num - b.num;
      else if (e.op == "*") v.num = a.num * b.num;
      else if (e.op == "/") v.num = a.num / b.num;
      else unsupported("unknown arithmetic operator " + e.op);
      return v;
    }
    case FilterExpr::Kind::Compare: {
      Value a = evalFilter(e.args[0], table, row);
      Value b = evalFilter(e.args[1], table, row);
      int cmp;
      if (a.kind == Value::Kind::Num && b.kind == Value::Kind::Num)
        cmp = a.num < b.num ? -1 : (a.num > b.num ? 1 : 0);
      else if (a.kind == Value::Kind::Str && b.kind == Value::Kind::Str)
        cmp = a.str.compare(b.str) < 0 ? -1 : (a.str.compare(b.str) > 0 ? 1 : 0);
      else
        unsupported("comparison between incompatible values");
      Value v;
      v.kind = Value::Kind::Bool;
      if (e.op == "=") v.boolean = cmp == 0;
      else if (e.op == "!=") v.boolean = cmp != 0;
      else if (e.op == "<") v.boolean = cmp < 0;
      else if (e.op == "<=") v.boolean = cmp <= 0;
      else if (e.op == ">") v.boolean = cmp > 0;
      else if (e.op == ">=") v.boolean = cmp >= 0;
      else unsupported("unknown comparison operator " + e.op);
      return v;
    }
  }
  unsupported("unknown filter expression");
}

class Evaluator {
public:
  explicit Evaluator(const TripleStore& store) : store_(store) {}

  BindingTable evalGroup(const GraphPattern& p, const std::string& graph) {
    return evalGroupFrom(p, graph, seedFromPinFilters(p));
  }

  BindingTable evalGroupFrom(const GraphPattern& p, const std::string& graph,
                             BindingTable t) {
    for (const auto& tp : p.triples) t = extend(t, tp, graph);
    for (const auto& svc : p.services) t = joinService(t, svc);
    if (!p.unions.empty()) {
      BindingTable u = evalUnion(p.unions, graph);
      t = join(t, u);
    }
    for (const auto& f : p.filters) {
      BindingTable filtered;
      filtered.variables = t.variables;
      for (auto& row : t.rows) {
        Value v = evalFilter(f, t, row);
        if (v.kind != Value::Kind::Bool)
          unsupported("FILTER expression is not boolean");
        if (v.boolean) filtered.rows.push_back(std::move(row));
      }
      t = std::move(filtered);
    }
    return t;
  }

  BindingTable projectLoud(const BindingTable& t, const std::vector<Variable>& vars) {
    for (const auto& v : vars)
      if (!t.columnIndex(v))
        unsupported("projection variable ?" + v.name + " is unbound in the pattern");
    return project(t, vars);
  }

private:
  /// Equality filters of the form ?v = 'literal' pre-bind the variable, so
  /// pattern matching can use the bound-object index instead of scanning.
  /// The filters themselves are still evaluated afterwards.
  BindingTable seedFromPinFilters(const GraphPattern& p) {
    BindingTable t;
    std::vector<RdfTerm> row;
    for (const auto& f : p.filters) {
      if (f.kind != FilterExpr::Kind::Compare || f.op != "=") continue;
      const FilterExpr* var = nullptr;
      const FilterExpr* lit = nullptr;
      for (const auto& side : f.args) {
        if (side.kind == FilterExpr::Kind::Var) var = &side;
        if (side.kind == FilterExpr::Kind::String) lit = &side;
      }
      if (!var || !lit) continue;
      if (t.columnIndex(Variable{var->value})) continue;
      t.variables.push_back(Variable{var->value});
      row.push_back(RdfTerm::literal(lit->value));
    }
    t.rows.push_back(std::move(row));
    return t;
  }

  /// SERVICE join. Bindings of correlation-visible variables (all free
  /// variables for a plain block, the projected ones for a subselect) are
  /// pushed into the inner evaluation as seeds, memoized per distinct seed,
  /// so replicated services across UNION branches stay cheap.
  BindingTable joinService(const BindingTable& t, const ServiceBlock& svc) {
    std::set<Variable> visible;
    if (svc.hasSubselect)
      visible = std::set<Variable>(svc.subselectVars.begin(),
                                   svc.subselectVars.end());
    else
      visible = freeVariables(svc.inner);

    std::vector<std::size_t> seedIdx;
    std::vector<Variable> seedVars;
    for (std::size_t i = 0; i < t.variables.size(); ++i) {
      if (visible.count(t.variables[i])) {
        seedIdx.push_back(i);
        seedVars.push_back(t.variables[i]);
      }
    }

    // for wide outer tables a single inner evaluation plus hash join beats
    // per-seed evaluation; the seeded path pays off for the replicated
    // services of pushdown UNION branches
    if (seedVars.empty() || t.rows.size() > 256) {
      BindingTable sub = evalGroup(svc.inner, svc.endpointIri);
      if (svc.hasSubselect) sub = projectLoud(sub, svc.subselectVars);
      return join(t, sub);
    }

    auto evalSeeded = [&](const std::vector<RdfTerm>& row) {
      BindingTable seed;
      seed.variables = seedVars;
      std::vector<RdfTerm> seedRow;
      for (auto i : seedIdx) seedRow.push_back(row[i]);
      seed.rows.push_back(std::move(seedRow));
      BindingTable sub = evalGroupFrom(svc.inner, svc.endpointIri, std::move(seed));
      if (svc.hasSubselect) sub = projectLoud(sub, svc.subselectVars);
      return sub;
    };

    std::unordered_map<std::string, BindingTable> memo;
    BindingTable out;
    bool headerReady = false;
    for (const auto& row : t.rows) {
      std::string key;
      for (auto i : seedIdx) {
        key += termKey(row[i]);
        key.push_back('\x1f');
      }
      auto it = memo.find(key);
      if (it == memo.end()) it = memo.emplace(key, evalSeeded(row)).first;
      const BindingTable& sub = it->second;
      std::vector<std::size_t> extras;
      for (std::size_t i = 0; i < sub.variables.size(); ++i)
        if (!t.columnIndex(sub.variables[i])) extras.push_back(i);
      if (!headerReady) {
        out.variables = t.variables;
        for (auto i : extras) out.variables.push_back(sub.variables[i]);
        headerReady = true;
      }
      for (const auto& subRow : sub.rows) {
        std::vector<RdfTerm> merged = row;
        for (auto i : extras) merged.push_back(subRow[i]);
        out.rows.push_back(std::move(merged));
      }
    }
    if (!headerReady) {
      // no input rows: keep a stable header so later projections still work
      out.variables = t.variables;
      std::set<Variable> extra =
          svc.hasSubselect ? std::set<Variable>(svc.subselectVars.begin(),
                                                svc.subselectVars.end())
                           : freeVariables(svc.inner);
      for (const auto& v : extra)
        if (!out.columnIndex(v)) out.variables.push_back(v);
    }
    return out;
  }

  BindingTable evalUnion(const std::vector<GraphPattern>& branches,
                         const std::string& graph) {
    BindingTable out = evalGroup(branches.front(), graph);
    for (std::size_t i = 1; i < branches.size(); ++i) {
      BindingTable b = evalGroup(branches[i], graph);
      if (b.variables.size() != out.variables.size())
        unsupported("UNION branches must bind the same variables");
      // align columns by name
      std::vector<std::size_t> order;
      for (const auto& v : out.variables) {
        auto idx = b.columnIndex(v);
        if (!idx) unsupported("UNION branches must bind the same variables");
        order.push_back(*idx);
      }
      for (const auto& row : b.rows) {
        std::vector<RdfTerm> aligned;
        aligned.reserve(order.size());
        for (auto i2 : order) aligned.push_back(row[i2]);
        out.rows.push_back(std::move(aligned));
      }
    }
    return out;
  }

  BindingTable extend(const BindingTable& t, const TriplePattern& tp,
                      const std::string& graph) {
    // new header: existing vars plus first occurrences in this pattern
    BindingTable out;
    out.variables = t.variables;
    auto addVar = [&](const VarOrTerm& vt) {
      if (const auto* v = std::get_if<Variable>(&vt))
        if (!out.columnIndex(*v)) out.variables.push_back(*v);
    };
    addVar(tp.subject);
    addVar(tp.predicate);
    addVar(tp.object);

    for (const auto& row : t.rows) {
      // resolve pattern positions under the current row
      auto resolve = [&](const VarOrTerm& vt) -> const RdfTerm* {
        if (const auto* term = std::get_if<RdfTerm>(&vt)) return term;
        auto idx = t.columnIndex(std::get<Variable>(vt));
        return idx ? &row[*idx] : nullptr;
      };
      const RdfTerm* s = resolve(tp.subject);
      const RdfTerm* p = resolve(tp.predicate);
      const RdfTerm* o = resolve(tp.object);
      for (std::size_t qi : store_.candidates(graph, s, p, o)) {
        const auto& quad = store_.quad(qi);
        if (s && !(*s == quad.subject)) continue;
        if (p && !(*p == quad.predicate)) continue;
        if (o && !(*o == quad.object)) continue;
        // bind new variables, honoring repeated variables in the pattern
        std::vector<RdfTerm> extended = row;
        extended.resize(out.variables.size());
        std::vector<bool> isSet(out.variables.size(), false);
        for (std::size_t i = 0; i < row.size(); ++i) isSet[i] = true;
        bool ok = true;
        auto bind = [&](const VarOrTerm& vt, const RdfTerm& value) {
          if (!ok) return;
          if (const auto* v = std::get_if<Variable>(&vt)) {
            std::size_t idx = *out.columnIndex(*v);
            if (idx < t.variables.size()) return;  // already matched above
            if (!isSet[idx]) {
              extended[idx] = value;
              isSet[idx] = true;
            } else if (!(extended[idx] == value)) {
              ok = false;
            }
          }
        };
        bind(tp.subject, quad.subject);
        bind(tp.predicate, quad.predicate);
        bind(tp.object, quad.object);
        if (ok) out.rows.push_back(std::move(extended));
      }
    }
    return out;
  }

  BindingTable join(const BindingTable& a, const BindingTable& b) {
    std::vector<std::size_t> sharedA, sharedB;
    std::vector<std::size_t> extraB;
    for (std::size_t i = 0; i < b.variables.size(); ++i) {
      auto idx = a.columnIndex(b.variables[i]);
      if (idx) {
        sharedA.push_back(*idx);
        sharedB.push_back(i);
      } else {
        extraB.push_back(i);
      }
    }
    BindingTable out;
    out.variables = a.variables;
    for (auto i : extraB) out.variables.push_back(b.variables[i]);

    auto key = [](const std::vector<RdfTerm>& row,
                  const std::vector<std::size_t>& idx) {
      std::string k;
      for (auto i : idx) {
        k += termKey(row[i]);
        k.push_back('\x1f');
      }
      return k;
    };
    std::unordered_map<std::string, std::vector<std::size_t>> built;
    for (std::size_t i = 0; i < b.rows.size(); ++i)
      built[key(b.rows[i], sharedB)].push_back(i);
    for (const auto& rowA : a.rows) {
      auto it = built.find(key(rowA, sharedA));
      if (it == built.end()) continue;
      for (auto bi : it->second) {
        std::vector<RdfTerm> row = rowA;
        for (auto i : extraB) row.push_back(b.rows[bi][i]);
        out.rows.push_back(std::move(row));
      }
    }
    return out;
  }

  const TripleStore& store_;
};

}  // namespace

MockSparqlBackend::MockSparqlBackend(BackendConfig config, TripleStore store,
                                     PrefixMap prefixes)
    : SparqlBackend(std::move(config)),
      store_(std::move(store)),
      prefixes_(std::move(prefixes)) {}

BindingTable MockSparqlBackend::doSelect(const std::string& queryText,
                                         const CancelToken& cancel) {
  ExtendedQuery q;
  try {
    q = parseExtendedQuery(queryText, prefixes_);
  } catch (const ParseError& e) {
    throw MediatorError(ErrorCode::UnsupportedFeature, Stage::Backend,
                        std::string("mock SPARQL engine: ") + e.describe());
  }
  if (!q.where.xqueryFilters.empty())
    unsupported("XQueryFILTER reached the SPARQL backend");

  Evaluator ev(store_);
  BindingTable matched = ev.evalGroup(q.where, "");
  double workRows = double(matched.rows.size());

  BindingTable result;
  if (q.countProbe) {
    result.variables = q.selectVars;
    result.rows.push_back({RdfTerm::integer(long(matched.rows.size()))});
  } else {
    result = ev.projectLoud(matched, q.selectVars);
  }

  double delay = 0;
  if (auto lat = config().simulatedLatency)
    delay = lat->fixedMs + lat->perRowMs * workRows;
  lastDelayMs_.store(delay);
  simulateDelay(config().id, delay, cancel);
  return result;
}

}  // namespace xqfed
