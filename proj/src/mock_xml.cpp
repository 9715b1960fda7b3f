#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>

#include "xqfed/errors.hpp"
#include "xqfed/mock_backends.hpp"

namespace xqfed {

namespace {

[[noreturn]] void unsupported(const std::string& what) {
  throw MediatorError(ErrorCode::UnsupportedFeature, Stage::Backend,
                      "mock XQuery engine: " + what);
}

[[noreturn]] void runtimeError(const std::string& what) {
  throw MediatorError(ErrorCode::XQueryRuntimeError, Stage::Backend,
                      "XQuery runtime: " + what);
}

struct NodeHandle {
  const XmlNode* node = nullptr;
  const std::string* docId = nullptr;
};

struct XdmItem {
  enum class Kind { Node, Str, Num, Bool, Date };
  Kind kind = Kind::Str;
  NodeHandle node;
  std::string str;
  double num = 0;
  bool boolean = false;
  long dateDays = 0;
};

using Sequence = std::vector<XdmItem>;

XdmItem makeStr(std::string s) {
  XdmItem i;
  i.kind = XdmItem::Kind::Str;
  i.str = std::move(s);
  return i;
}

XdmItem makeNum(double n) {
  XdmItem i;
  i.kind = XdmItem::Kind::Num;
  i.num = n;
  return i;
}

XdmItem makeBool(bool b) {
  XdmItem i;
  i.kind = XdmItem::Kind::Bool;
  i.boolean = b;
  return i;
}

XdmItem makeNode(const XmlNode* node, const std::string* docId) {
  XdmItem i;
  i.kind = XdmItem::Kind::Node;
  i.node = {node, docId};
  return i;
}

XdmItem makeDate(long days) {
  XdmItem i;
  i.kind = XdmItem::Kind::Date;
  i.dateDays = days;
  return i;
}

std::optional<long> parseIsoDate(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  int y = std::stoi(s.substr(0, 4));
  unsigned m = unsigned(std::stoi(s.substr(5, 2)));
  unsigned d = unsigned(std::stoi(s.substr(8, 2)));
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string formatNum(double n) {
  if (n == std::floor(n) && std::abs(n) < 1e15)
    return std::to_string(static_cast<long long>(n));
  return std::to_string(n);
}

std::string formatDate(long days) {
  std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

std::string itemString(const XdmItem& item) {
  switch (item.kind) {
    case XdmItem::Kind::Node: return item.node.node->stringValue();
    case XdmItem::Kind::Str: return item.str;
    case XdmItem::Kind::Num: return formatNum(item.num);
    case XdmItem::Kind::Bool: return item.boolean ? "true" : "false";
    case XdmItem::Kind::Date: return formatDate(item.dateDays);
  }
  return "";
}

bool itemTruthy(const XdmItem& item) {
  switch (item.kind) {
    case XdmItem::Kind::Node: return true;
    case XdmItem::Kind::Str: return !item.str.empty();
    case XdmItem::Kind::Num: return item.num != 0;
    case XdmItem::Kind::Bool: return item.boolean;
    case XdmItem::Kind::Date: return true;
  }
  return false;
}

/// Effective boolean value: true when any item is truthy.
bool ebv(const Sequence& seq) {
  for (const auto& i : seq)
    if (itemTruthy(i)) return true;
  return false;
}

class FlwrEvaluator {
public:
  FlwrEvaluator(const XmlDocStore& docs, const std::string& collectionName)
      : docs_(docs), collectionName_(collectionName) {}

  Sequence run(const FlwrQuery& q) {
    Sequence results;
    evalFor(q, 0, results);
    return results;
  }

  long docsTouched() const { return docsTouched_; }

private:
  void evalFor(const FlwrQuery& q, std::size_t i, Sequence& results) {
    if (i < q.forClauses.size()) {
      Sequence seq = eval(q.forClauses[i].expr, nullptr);
      for (const auto& item : seq) {
        ScopedBinding bind(vars_, q.forClauses[i].var, Sequence{item});
        evalFor(q, i + 1, results);
      }
      return;
    }
    evalLets(q, 0, results);
  }

  void evalLets(const FlwrQuery& q, std::size_t i, Sequence& results) {
    if (i < q.letClauses.size()) {
      Sequence seq = eval(q.letClauses[i].expr, nullptr);
      ScopedBinding bind(vars_, q.letClauses[i].var, std::move(seq));
      evalLets(q, i + 1, results);
      return;
    }
    if (q.whereExpr && !ebv(eval(*q.whereExpr, nullptr))) return;
    Sequence ret = eval(q.returnExpr, nullptr);
    results.insert(results.end(), ret.begin(), ret.end());
  }

  struct ScopedBinding {
    ScopedBinding(std::map<std::string, Sequence>& vars, const std::string& name,
                  Sequence value)
        : vars_(vars), name_(name) {
      auto it = vars_.find(name);
      if (it != vars_.end()) previous_ = std::move(it->second);
      vars_[name] = std::move(value);
    }
    ~ScopedBinding() {
      if (previous_)
        vars_[name_] = std::move(*previous_);
      else
        vars_.erase(name_);
    }
    std::map<std::string, Sequence>& vars_;
    std::string name_;
    std::optional<Sequence> previous_;
  };

  const XmlNode* loadDoc(const std::string& id) {
    ++docsTouched_;
    return docs_.find(id);
  }

  Sequence evalCollection(const std::string& name) {
    if (name != collectionName_)
      unsupported("unknown collection '" + name + "'");
    Sequence out;
    for (const auto& [id, root] : docs_.all()) out.push_back(makeNode(&root, &id));
    docsTouched_ += long(docs_.size());
    return out;
  }

  void collectDescendants(const XmlNode* node, const std::string* docId,
                          const std::string& nameTest, Sequence& out) {
    for (const auto& child : node->children) {
      if (nameTest == "*" || child.name == nameTest)
        out.push_back(makeNode(&child, docId));
      collectDescendants(&child, docId, nameTest, out);
    }
  }

  Sequence applyStep(const XdmItem& context, const XqExpr::Step& step) {
    NodeHandle h;
    if (context.kind == XdmItem::Kind::Node) {
      h = context.node;
    } else if (context.kind == XdmItem::Kind::Str) {
      // bare document ids resolve to their documents
      const XmlNode* doc = loadDoc(context.str);
      if (!doc) return {};
      auto it = docs_.all().find(context.str);
      h = {doc, &it->first};
    } else {
      runtimeError("path step applied to a non-node item");
    }
    Sequence cands;
    if (step.descendant) {
      collectDescendants(h.node, h.docId, step.nameTest, cands);
    } else {
      for (const auto& child : h.node->children)
        if (step.nameTest == "*" || child.name == step.nameTest)
          cands.push_back(makeNode(&child, h.docId));
    }
    for (const auto& pred : step.predicates) {
      Sequence kept;
      if (pred.kind == XqExpr::Kind::NumberLit) {
        std::size_t pos = std::size_t(std::stoul(pred.value));
        if (pos >= 1 && pos <= cands.size()) kept.push_back(cands[pos - 1]);
      } else {
        for (const auto& cand : cands)
          if (ebv(eval(pred, &cand))) kept.push_back(cand);
      }
      cands = std::move(kept);
    }
    return cands;
  }

  Sequence evalPath(const XqExpr& e, const XdmItem* context) {
    Sequence current;
    if (e.hasRoot) {
      current = eval(e.args[0], context);
    } else {
      if (!context) runtimeError("relative path without a context item");
      current = {*context};
    }
    for (const auto& step : e.steps) {
      Sequence next;
      for (const auto& item : current) {
        Sequence stepped = applyStep(item, step);
        next.insert(next.end(), stepped.begin(), stepped.end());
      }
      current = std::move(next);
    }
    return current;
  }

  std::optional<double> itemNumber(const XdmItem& item) {
    if (item.kind == XdmItem::Kind::Num) return item.num;
    std::string s = itemString(item);
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
  }

  bool compareItems(const XdmItem& a, const XdmItem& b, const std::string& op) {
    int cmp = 0;
    if (a.kind == XdmItem::Kind::Date || b.kind == XdmItem::Kind::Date) {
      auto toDays = [](const XdmItem& i) -> long {
        if (i.kind == XdmItem::Kind::Date) return i.dateDays;
        auto d = parseIsoDate(itemString(i));
        if (!d) runtimeError("cannot compare '" + itemString(i) + "' as xs:date");
        return *d;
      };
      long da = toDays(a), db = toDays(b);
      cmp = da < db ? -1 : (da > db ? 1 : 0);
    } else if (a.kind == XdmItem::Kind::Num || b.kind == XdmItem::Kind::Num) {
      auto na = itemNumber(a), nb = itemNumber(b);
      if (!na || !nb) runtimeError("cannot compare non-numeric value numerically");
      cmp = *na < *nb ? -1 : (*na > *nb ? 1 : 0);
    } else if (a.kind == XdmItem::Kind::Bool || b.kind == XdmItem::Kind::Bool) {
      bool ba = itemTruthy(a), bb = itemTruthy(b);
      cmp = ba == bb ? 0 : (ba ? 1 : -1);
    } else {
      std::string sa = itemString(a), sb = itemString(b);
      cmp = sa < sb ? -1 : (sa > sb ? 1 : 0);
    }
    if (op == "=") return cmp == 0;
    if (op == "!=") return cmp != 0;
    if (op == "<") return cmp < 0;
    if (op == "<=") return cmp <= 0;
    if (op == ">") return cmp > 0;
    if (op == ">=") return cmp >= 0;
    unsupported("unknown comparison operator " + op);
  }

  std::string renderChildren(const XqExpr& ctor, const XdmItem* context) {
    std::string out;
    for (const auto& child : ctor.args) {
      if (child.kind == XqExpr::Kind::ElementCtor) {
        out += renderElement(child, context);
      } else {
        Sequence seq = eval(child, context);
        for (std::size_t i = 0; i < seq.size(); ++i) {
          if (i) out += " ";
          out += itemString(seq[i]);
        }
      }
    }
    return out;
  }

  std::string renderElement(const XqExpr& ctor, const XdmItem* context) {
    return "<" + ctor.value + ">" + renderChildren(ctor, context) + "</" +
           ctor.value + ">";
  }

  Sequence evalCall(const XqExpr& e, const XdmItem* context) {
    const std::string& fn = e.value;
    auto arg = [&](std::size_t i) { return eval(e.args[i], context); };
    if (fn == "doc") {
      if (e.args.size() != 1) unsupported("doc() takes one argument");
      Sequence ids = arg(0);
      Sequence out;
      for (const auto& id : ids) {
        std::string key = itemString(id);
        const XmlNode* doc = loadDoc(key);
        if (!doc) continue;
        auto it = docs_.all().find(key);
        out.push_back(makeNode(doc, &it->first));
      }
      return out;
    }
    if (fn == "collection") {
      if (e.args.size() != 1) unsupported("collection() takes one argument");
      Sequence names = arg(0);
      if (names.size() != 1) unsupported("collection() needs a single name");
      return evalCollection(itemString(names[0]));
    }
    if (fn == "contains") {
      if (e.args.size() != 2) unsupported("contains() takes two arguments");
      Sequence hay = arg(0);
      Sequence needleSeq = arg(1);
      if (needleSeq.empty()) return {makeBool(false)};
      std::string needle = itemString(needleSeq.front());
      for (const auto& item : hay)
        if (itemString(item).find(needle) != std::string::npos)
          return {makeBool(true)};
      return {makeBool(false)};
    }
    if (fn == "base-uri") {
      if (e.args.size() != 1) unsupported("base-uri() takes one argument");
      Sequence items = arg(0);
      Sequence out;
      for (const auto& item : items) {
        if (item.kind == XdmItem::Kind::Node)
          out.push_back(makeStr(*item.node.docId));
        else if (item.kind == XdmItem::Kind::Str)
          out.push_back(item);
        else
          runtimeError("base-uri() expects nodes");
      }
      return out;
    }
    if (fn == "xs:date") {
      if (e.args.size() != 1) unsupported("xs:date() takes one argument");
      Sequence items = arg(0);
      if (items.size() != 1) runtimeError("xs:date() expects a single value");
      auto days = parseIsoDate(itemString(items[0]));
      if (!days) runtimeError("malformed xs:date lexical '" + itemString(items[0]) + "'");
      return {makeDate(*days)};
    }
    if (fn == "count") {
      if (e.args.size() != 1) unsupported("count() takes one argument");
      return {makeNum(double(arg(0).size()))};
    }
    if (fn == "exists") {
      if (e.args.size() != 1) unsupported("exists() takes one argument");
      return {makeBool(!arg(0).empty())};
    }
    if (fn == "not") {
      if (e.args.size() != 1) unsupported("not() takes one argument");
      return {makeBool(!ebv(arg(0)))};
    }
    if (fn == "true" && e.args.empty()) return {makeBool(true)};
    if (fn == "false" && e.args.empty()) return {makeBool(false)};
    unsupported("unknown function " + fn + "()");
  }

  Sequence eval(const XqExpr& e, const XdmItem* context) {
    switch (e.kind) {
      case XqExpr::Kind::StringLit: return {makeStr(e.value)};
      case XqExpr::Kind::NumberLit: return {makeNum(std::stod(e.value))};
      case XqExpr::Kind::XqVarRef: {
        auto it = vars_.find(e.value);
        if (it == vars_.end()) runtimeError("unbound variable $" + e.value);
        return it->second;
      }
      case XqExpr::Kind::SparqlVarRef:
        unsupported("SPARQL variable ?" + e.value + " reached XQuery execution");
      case XqExpr::Kind::FunctionCall: return evalCall(e, context);
      case XqExpr::Kind::Compare: {
        Sequence lhs = eval(e.args[0], context);
        Sequence rhs = eval(e.args[1], context);
        for (const auto& a : lhs)
          for (const auto& b : rhs)
            if (compareItems(a, b, e.value)) return {makeBool(true)};
        return {makeBool(false)};
      }
      case XqExpr::Kind::BoolOp: {
        bool lhs = ebv(eval(e.args[0], context));
        if (e.value == "and")
          return {makeBool(lhs && ebv(eval(e.args[1], context)))};
        if (e.value == "or")
          return {makeBool(lhs || ebv(eval(e.args[1], context)))};
        unsupported("unknown boolean operator " + e.value);
      }
      case XqExpr::Kind::Path: return evalPath(e, context);
      case XqExpr::Kind::Sequence: {
        Sequence out;
        for (const auto& item : e.args) {
          Sequence part = eval(item, context);
          out.insert(out.end(), part.begin(), part.end());
        }
        return out;
      }
      case XqExpr::Kind::ElementCtor:
        return {makeStr(renderElement(e, context))};
    }
    unsupported("unknown expression kind");
  }

  const XmlDocStore& docs_;
  const std::string& collectionName_;
  std::map<std::string, Sequence> vars_;
  long docsTouched_ = 0;
};

}  // namespace

MockXmlBackend::MockXmlBackend(BackendConfig config, XmlDocStore docs)
    : XmlBackend(std::move(config)), docs_(std::move(docs)) {}

XmlResultSequence MockXmlBackend::doEval(const std::string& queryText,
                                         const CancelToken& cancel) {
  FlwrQuery q;
  try {
    q = parseFlwr(queryText);
  } catch (const ParseError& e) {
    throw MediatorError(ErrorCode::UnsupportedFeature, Stage::Backend,
                        std::string("mock XQuery engine: ") + e.describe());
  }
  FlwrEvaluator ev(docs_, config().collectionName);
  Sequence results = ev.run(q);

  XmlResultSequence out;
  if (q.countWrapped) {
    out.push_back(std::to_string(results.size()));
  } else {
    out.reserve(results.size());
    for (const auto& item : results) {
      if (item.kind == XdmItem::Kind::Node)
        out.push_back(item.node.node->serialize());
      else
        out.push_back(itemString(item));
    }
  }

  double delay = 0;
  if (auto lat = config().simulatedLatency)
    delay = lat->fixedMs + lat->perRowMs * double(ev.docsTouched());
  lastDelayMs_.store(delay);
  simulateDelay(config().id, delay, cancel);
  return out;
}

long MockXmlBackend::countDocuments() {
  double delay = 0;
  if (auto lat = config().simulatedLatency) delay = lat->fixedMs;
  lastDelayMs_.store(delay);
  simulateDelay(config().id, delay, {});
  return long(docs_.size());
}

}  // namespace xqfed
