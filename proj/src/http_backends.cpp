#include "xqfed/http_backends.hpp"

#include <cctype>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "xqfed/errors.hpp"
#include "xqfed/parser.hpp"
#include "xqfed/serialize.hpp"
#include "xqfed/xml_dom.hpp"

namespace xqfed {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /path or /
};

SplitUrl splitUrl(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "endpoint URL must include a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

httplib::Headers baseHeaders(const BackendConfig& cfg) {
  httplib::Headers headers;
  if (cfg.authHeader) {
    auto colon = cfg.authHeader->find(':');
    if (colon != std::string::npos) {
      std::string name = cfg.authHeader->substr(0, colon);
      std::string value = cfg.authHeader->substr(colon + 1);
      while (!value.empty() && value.front() == ' ') value.erase(value.begin());
      headers.emplace(name, value);
    } else {
      headers.emplace("Authorization", *cfg.authHeader);
    }
  }
  return headers;
}

void applyTimeouts(httplib::Client& cli, const BackendConfig& cfg) {
  auto usec = std::chrono::microseconds(llround(cfg.requestTimeoutMs * 1000));
  cli.set_connection_timeout(usec);
  cli.set_read_timeout(usec);
  cli.set_write_timeout(usec);
}

bool isConnectFailure(httplib::Error err) {
  return err == httplib::Error::Connection ||
         err == httplib::Error::ConnectionTimeout;
}

/// POST with connect-failure retries only; mid-response failures surface
/// immediately (the request may not be idempotent on the server side).
httplib::Result postWithRetry(const BackendConfig& cfg,
                              const std::string& path,
                              const httplib::Headers& headers,
                              const std::string& body,
                              const std::string& contentType) {
  SplitUrl url = splitUrl(*cfg.endpointUrl);
  httplib::Client cli(url.base);
  applyTimeouts(cli, cfg);
  httplib::Result res;
  for (int attempt = 0; attempt <= cfg.retryCount; ++attempt) {
    res = cli.Post(path.c_str(), headers, body, contentType.c_str());
    if (res) return res;
    if (!isConnectFailure(res.error())) break;
  }
  return res;
}

[[noreturn]] void throwHttpError(const BackendConfig& cfg,
                                 const httplib::Result& res) {
  if (!res) {
    auto reason = res.error() == httplib::Error::ConnectionTimeout ||
                          res.error() == httplib::Error::Read
                      ? BackendError::Reason::Timeout
                      : BackendError::Reason::Connect;
    throw BackendError(cfg.id, reason,
                       "backend '" + cfg.id + "': " + httplib::to_string(res.error()));
  }
  throw BackendError(cfg.id, BackendError::Reason::HttpStatus,
                     "backend '" + cfg.id + "': HTTP status " +
                         std::to_string(res->status));
}

RdfTerm termFromJson(const BackendConfig& cfg, const json& cell) {
  if (!cell.is_object() || !cell.contains("type") || !cell.contains("value"))
    throw BackendError(cfg.id, BackendError::Reason::MalformedResults,
                       "malformed binding cell in SPARQL results");
  std::string type = cell["type"].get<std::string>();
  std::string value = cell["value"].get<std::string>();
  if (type == "uri") return RdfTerm::iri(value);
  if (type == "bnode") {
    RdfTerm t;
    t.kind = RdfTerm::Kind::BlankNode;
    t.lexical = value;
    return t;
  }
  if (type == "literal" || type == "typed-literal") {
    RdfTerm t = RdfTerm::literal(value);
    if (cell.contains("datatype"))
      t.datatypeIri = cell["datatype"].get<std::string>();
    if (cell.contains("xml:lang"))
      t.langTag = cell["xml:lang"].get<std::string>();
    return t;
  }
  throw BackendError(cfg.id, BackendError::Reason::MalformedResults,
                     "unknown term type '" + type + "' in SPARQL results");
}

std::string urlEncode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(char(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

}  // namespace

BindingTable parseSparqlJsonResults(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw BackendError("", BackendError::Reason::MalformedResults,
                       std::string("SPARQL results are not valid JSON: ") + e.what());
  }
  if (!j.contains("head") || !j["head"].contains("vars") ||
      !j.contains("results") || !j["results"].contains("bindings"))
    throw BackendError("", BackendError::Reason::MalformedResults,
                       "SPARQL results missing head.vars or results.bindings");
  BindingTable table;
  for (const auto& v : j["head"]["vars"])
    table.variables.push_back(Variable{v.get<std::string>()});
  BackendConfig dummy;
  for (const auto& binding : j["results"]["bindings"]) {
    std::vector<RdfTerm> row;
    row.reserve(table.variables.size());
    for (const auto& v : table.variables) {
      if (!binding.contains(v.name))
        throw BackendError("", BackendError::Reason::MalformedResults,
                           "binding lacks a value for ?" + v.name);
      row.push_back(termFromJson(dummy, binding[v.name]));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string toDispatchXquery(const std::string& canonicalText) {
  auto lowerKeywords = [](const std::string& text) {
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line)) {
      for (const char* kw : {"FOR ", "LET ", "WHERE ", "RETURN "}) {
        std::size_t n = std::string(kw).size();
        if (line.compare(0, n, kw) == 0) {
          for (std::size_t i = 0; i + 1 < n; ++i)
            line[i] = char(std::tolower(static_cast<unsigned char>(line[i])));
          break;
        }
      }
      out += line;
      out += '\n';
    }
    return out;
  };

  FlwrQuery q;
  try {
    q = parseFlwr(canonicalText);
  } catch (const ParseError&) {
    return lowerKeywords(canonicalText);  // raw probe text, pass through
  }

  // Pushdown form: the first FOR enumerates bare document-id strings. Real
  // processors need doc(...) around path roots; base-uri of the id is the id.
  if (!q.forClauses.empty() &&
      q.forClauses[0].expr.kind == XqExpr::Kind::Sequence) {
    const auto& items = q.forClauses[0].expr.args;
    bool allStrings = !items.empty();
    for (const auto& i : items)
      if (i.kind != XqExpr::Kind::StringLit) allStrings = false;
    if (allStrings) {
      const std::string idVar = q.forClauses[0].var;
      struct Rewriter {
        const std::string& idVar;
        void fix(XqExpr& e) const {
          if (e.kind == XqExpr::Kind::Path && e.hasRoot &&
              e.args[0].kind == XqExpr::Kind::XqVarRef &&
              e.args[0].value == idVar && !e.steps.empty()) {
            e.args[0] = XqExpr::call("doc", {XqExpr::xqVar(idVar)});
          }
          if (e.kind == XqExpr::Kind::FunctionCall && e.value == "base-uri" &&
              e.args.size() == 1 && e.args[0].kind == XqExpr::Kind::XqVarRef &&
              e.args[0].value == idVar) {
            e = XqExpr::xqVar(idVar);
          }
          for (auto& a : e.args) fix(a);
          for (auto& s : e.steps)
            for (auto& p : s.predicates) fix(p);
        }
      } rewriter{idVar};
      for (std::size_t i = 1; i < q.forClauses.size(); ++i)
        rewriter.fix(q.forClauses[i].expr);
      for (auto& c : q.letClauses) rewriter.fix(c.expr);
      if (q.whereExpr) rewriter.fix(*q.whereExpr);
      rewriter.fix(q.returnExpr);
    }
  }
  return lowerKeywords(serialize(q));
}

HttpSparqlBackend::HttpSparqlBackend(BackendConfig config)
    : SparqlBackend(std::move(config)) {}

BindingTable HttpSparqlBackend::doSelect(const std::string& queryText,
                                         const CancelToken&) {
  const BackendConfig& cfg = config();
  httplib::Headers headers = baseHeaders(cfg);
  headers.emplace("Accept", "application/sparql-results+json");
  std::string body = "query=" + urlEncode(queryText);
  auto res = postWithRetry(cfg, splitUrl(*cfg.endpointUrl).path, headers, body,
                           "application/x-www-form-urlencoded");
  if (!res || res->status != 200) throwHttpError(cfg, res);
  try {
    return parseSparqlJsonResults(res->body);
  } catch (const BackendError& e) {
    throw BackendError(cfg.id, BackendError::Reason::MalformedResults, e.what());
  }
}

HttpXmlBackend::HttpXmlBackend(BackendConfig config)
    : XmlBackend(std::move(config)) {}

std::string HttpXmlBackend::post(const std::string& queryText) {
  const BackendConfig& cfg = config();
  httplib::Headers headers = baseHeaders(cfg);
  headers.emplace("Accept", "application/xml");
  httplib::Result res;
  if (cfg.xmlProfile == BackendConfig::XmlHttpProfile::QueryInBody) {
    res = postWithRetry(cfg, splitUrl(*cfg.endpointUrl).path, headers,
                        queryText, "application/xquery");
  } else {
    std::string body = "query=" + urlEncode(queryText);
    res = postWithRetry(cfg, splitUrl(*cfg.endpointUrl).path, headers, body,
                        "application/x-www-form-urlencoded");
  }
  if (!res || res->status != 200) throwHttpError(cfg, res);
  return res->body;
}

XmlResultSequence HttpXmlBackend::doEval(const std::string& queryText,
                                         const CancelToken&) {
  return parseXmlSequence(post(toDispatchXquery(queryText)));
}

long HttpXmlBackend::countDocuments() {
  std::string body =
      post("count(collection('" + config().collectionName + "'))");
  XmlResultSequence items = parseXmlSequence(body);
  if (items.size() != 1)
    throw BackendError(config().id, BackendError::Reason::MalformedResults,
                       "count(collection()) returned an unexpected shape");
  try {
    return std::stol(items[0]);
  } catch (const std::exception&) {
    throw BackendError(config().id, BackendError::Reason::MalformedResults,
                       "count(collection()) result is not a number: " + items[0]);
  }
}

}  // namespace xqfed
