#include "xqfed/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xqfed/bench.hpp"
#include "xqfed/errors.hpp"
#include "xqfed/serialize.hpp"

namespace xqfed {

namespace {

using ordered_json = nlohmann::ordered_json;

int exitCodeFor(Stage stage) {
  switch (stage) {
    case Stage::Config: return 1;
    case Stage::Parse: return 2;
    case Stage::Plan: return 3;
    case Stage::Backend: return 4;
    case Stage::Join: return 5;
  }
  return 1;
}

std::string readFile(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "cannot open file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string csvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

ordered_json termJson(const RdfTerm& t) {
  ordered_json cell;
  switch (t.kind) {
    case RdfTerm::Kind::Iri: cell["type"] = "uri"; break;
    case RdfTerm::Kind::Literal: cell["type"] = "literal"; break;
    case RdfTerm::Kind::BlankNode: cell["type"] = "bnode"; break;
  }
  cell["value"] = t.lexical;
  if (t.datatypeIri) cell["datatype"] = *t.datatypeIri;
  if (t.langTag) cell["xml:lang"] = *t.langTag;
  return cell;
}

struct ParsedOptions {
  std::optional<PlanKind> planOverride;
  std::optional<EstimateMode> mode;
  std::optional<CostEstimate> fixedEstimate;
};

std::optional<PlanKind> parsePlanFlag(const std::string& plan) {
  if (plan.empty() || plan == "auto") return std::nullopt;
  auto kind = planFromName(plan);
  if (!kind)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "unknown plan '" + plan + "'");
  return kind;
}

void parseEstimateFlag(const std::string& est, ParsedOptions& out) {
  if (est.empty()) return;
  if (est == "history") {
    out.mode = EstimateMode::History;
    return;
  }
  if (est == "oracle") {
    out.mode = EstimateMode::Oracle;
    return;
  }
  if (est.rfind("fixed:", 0) == 0) {
    std::vector<double> values;
    std::stringstream ss(est.substr(6));
    std::string part;
    while (std::getline(ss, part, ',')) values.push_back(std::stod(part));
    if (values.size() != 6)
      throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                          "--estimate fixed: needs 6 comma-separated numbers "
                          "(cSparql,cXquery,cJoinParallel,cJoinSparqlFirst,"
                          "rhoSparql,rhoXquery)");
    CostEstimate e;
    e.cSparql = values[0];
    e.cXquery = values[1];
    e.cJoinParallel = values[2];
    e.cJoinSparqlFirst = values[3];
    e.rhoSparql = values[4];
    e.rhoXquery = values[5];
    out.fixedEstimate = e;
    return;
  }
  throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                      "--estimate must be history, oracle or fixed:<6 numbers>");
}

void applyFormatFlag(MediatorConfig& cfg, const std::string& format) {
  if (format.empty()) return;
  if (format == "json" || format == "json-results")
    cfg.outputFormat = OutputFormat::JsonResults;
  else if (format == "csv")
    cfg.outputFormat = OutputFormat::Csv;
  else if (format == "table")
    cfg.outputFormat = OutputFormat::Table;
  else
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "--format must be json, csv or table");
}

std::vector<DocumentId> parseDocIds(const std::string& csv) {
  std::set<std::string> distinct;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) distinct.insert(part);
  }
  std::vector<DocumentId> out;
  for (const auto& s : distinct) out.push_back(DocumentId{s});
  return out;
}

int cmdRun(const std::string& queryFile, const std::string& configFile,
           const std::string& plan, const std::string& estimate,
           const std::string& format, bool explain) {
  MediatorConfig cfg = loadConfig(configFile);
  applyFormatFlag(cfg, format);
  ParsedOptions opts;
  opts.planOverride = parsePlanFlag(plan);
  parseEstimateFlag(estimate, opts);

  Mediator mediator = buildMediator(std::move(cfg));
  MediatorContext ctx = mediator.context();
  if (opts.mode) ctx.mode = *opts.mode;
  if (opts.fixedEstimate) ctx.fixedEstimate = opts.fixedEstimate;
  std::optional<PlanKind> planOverride = opts.planOverride;
  if (!planOverride && mediator.config.optimizerMode == OptimizerMode::FixedPlan)
    planOverride = mediator.config.fixedPlan;

  std::string queryText = readFile(queryFile);
  RunOutcome outcome = run(queryText, ctx, planOverride);
  std::cout << formatResults(outcome.table, mediator.config.outputFormat,
                             mediator.config.prefixMap);
  if (explain) std::cerr << outcome.report.toText();
  mediator.flushCatalog();
  return 0;
}

int cmdExplain(const std::string& queryFile, const std::string& configFile,
               const std::string& plan, const std::string& estimate,
               const std::string& docIdsCsv, const std::string& format) {
  MediatorConfig cfg = loadConfig(configFile);
  ParsedOptions opts;
  opts.planOverride = parsePlanFlag(plan);
  parseEstimateFlag(estimate, opts);

  Mediator mediator = buildMediator(std::move(cfg));
  std::string queryText = readFile(queryFile);
  ExtendedQuery q = parseExtendedQuery(queryText, mediator.config.prefixMap);

  ExplainReport report;
  if (q.where.xqueryFilters.empty()) {
    report.passthrough = true;
    report.sparqlText = serialize(q, mediator.config.prefixMap);
  } else {
    DecomposedQuery d = decompose(q);
    std::string collection = mediator.xml->config().collectionName;
    Estimator estimator(mediator.catalog, mediator.sparql.get(),
                        mediator.xml.get(), collection,
                        mediator.config.prefixMap, mediator.config.estimator);
    Estimator::Detail detail;
    bool haveEstimate = true;
    if (opts.fixedEstimate) {
      detail = estimator.costsForFixed(*opts.fixedEstimate);
    } else {
      EstimateMode mode = opts.mode.value_or(
          mediator.config.optimizerMode == OptimizerMode::Oracle
              ? EstimateMode::Oracle
              : EstimateMode::History);
      try {
        detail = estimator.estimateWithCosts(d, mode);
      } catch (const MediatorError& e) {
        if (opts.planOverride && e.code() == ErrorCode::NoStatsAvailable)
          haveEstimate = false;  // a fixed plan can still be explained
        else
          throw;
      }
    }
    PlanKind chosen = opts.planOverride.value_or(
        haveEstimate ? choosePlan(detail.costs) : PlanKind::Parallel);
    report.chosenPlan = chosen;
    report.overridden = opts.planOverride.has_value();
    report.estimated = haveEstimate;
    if (haveEstimate) {
      report.estimate = detail.estimate;
      report.costs = detail.costs;
    }
    std::optional<std::vector<DocumentId>> docIds;
    if (!docIdsCsv.empty()) docIds = parseDocIds(docIdsCsv);
    RewrittenPlanQueries rpq = buildPlanQueries(
        d, chosen, mediator.xml->config().collectionName,
        mediator.config.prefixMap, docIds);
    report.sparqlText = rpq.sparqlText;
    report.xqueryText = rpq.xqueryText;
    if (chosen != PlanKind::Parallel && !docIds) {
      // pushdown texts depend on runtime document ids
      if (chosen == PlanKind::SparqlFirst && !report.xqueryText)
        report.xqueryText = "(pushdown XQuery requires --doc-ids)\n";
      if (chosen == PlanKind::XqueryFirst && report.sparqlText.empty())
        report.sparqlText = "(pushdown SPARQL requires --doc-ids)\n";
    }
  }

  if (format == "json")
    std::cout << explainJson(report);
  else
    std::cout << report.toText();
  return 0;
}

int cmdBench(const std::string& scenario, std::uint64_t seed, int reps,
             const std::string& outFile) {
  std::vector<ScenarioSpec> specs;
  auto addScenario = [&](ScenarioSpec s) {
    s.seed = seed;
    specs.push_back(std::move(s));
  };
  if (scenario == "cs") addScenario(csScenario());
  else if (scenario == "ls") addScenario(lsScenario());
  else if (scenario == "ds") addScenario(dsScenario());
  else if (scenario == "all") {
    addScenario(csScenario());
    addScenario(lsScenario());
    addScenario(dsScenario());
  } else {
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "--scenario must be cs, ls, ds or all");
  }

  std::vector<BenchRow> rows;
  for (const auto& spec : specs) {
    std::vector<BenchRow> part = runBenchmark(spec, reps);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::string csv = benchCsv(rows);
  if (outFile.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(outFile);
    if (!out)
      throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                          "cannot open output file " + outFile);
    out << csv;
  }
  return 0;
}

int cmdCatalog(const std::string& action, const std::string& configFile) {
  MediatorConfig cfg = loadConfig(configFile);
  if (action == "show") {
    for (const auto& e : readCatalogFile(cfg.catalogPath)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(e.queryFingerprint));
      std::cout << buf << "\t" << e.observedCardinality << "\t"
                << e.observedTimeMs << "\t" << e.timestamp << "\n";
    }
    return 0;
  }
  if (action == "clear") {
    clearCatalogFile(cfg.catalogPath);
    return 0;
  }
  throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                      "catalog action must be show or clear");
}

}  // namespace

std::string formatResults(const BindingTable& table, OutputFormat format,
                          const PrefixMap& prefixes) {
  switch (format) {
    case OutputFormat::JsonResults: {
      ordered_json j;
      j["head"]["vars"] = ordered_json::array();
      for (const auto& v : table.variables) j["head"]["vars"].push_back(v.name);
      j["results"]["bindings"] = ordered_json::array();
      for (const auto& row : table.rows) {
        ordered_json binding = ordered_json::object();
        for (std::size_t i = 0; i < table.variables.size(); ++i)
          binding[table.variables[i].name] = termJson(row[i]);
        j["results"]["bindings"].push_back(std::move(binding));
      }
      return j.dump(2) + "\n";
    }
    case OutputFormat::Csv: {
      std::ostringstream out;
      for (std::size_t i = 0; i < table.variables.size(); ++i) {
        if (i) out << ",";
        out << table.variables[i].name;
      }
      out << "\n";
      for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (i) out << ",";
          out << csvEscape(row[i].lexical);
        }
        out << "\n";
      }
      return out.str();
    }
    case OutputFormat::Table: {
      std::vector<std::size_t> widths(table.variables.size());
      std::vector<std::vector<std::string>> cells;
      for (std::size_t i = 0; i < table.variables.size(); ++i)
        widths[i] = table.variables[i].name.size() + 1;
      for (const auto& row : table.rows) {
        std::vector<std::string> line;
        for (std::size_t i = 0; i < row.size(); ++i) {
          line.push_back(serializeTerm(row[i], prefixes));
          widths[i] = std::max(widths[i], line.back().size());
        }
        cells.push_back(std::move(line));
      }
      std::ostringstream out;
      for (std::size_t i = 0; i < table.variables.size(); ++i) {
        std::string h = "?" + table.variables[i].name;
        out << h << std::string(widths[i] > h.size() ? widths[i] - h.size() : 0, ' ')
            << (i + 1 < table.variables.size() ? "  " : "");
      }
      out << "\n";
      for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i)
          out << line[i]
              << std::string(widths[i] > line[i].size() ? widths[i] - line[i].size() : 0, ' ')
              << (i + 1 < line.size() ? "  " : "");
        out << "\n";
      }
      return out.str();
    }
  }
  return "";
}

std::string explainJson(const ExplainReport& report) {
  ordered_json j;
  j["plan"]["passthrough"] = report.passthrough;
  if (!report.passthrough) {
    j["plan"]["chosen"] = planName(report.chosenPlan);
    j["plan"]["overridden"] = report.overridden;
  }
  if (report.estimated) {
    j["costs"]["parallel"] = report.costs.parallel;
    j["costs"]["sparqlFirst"] = report.costs.sparqlFirst;
    j["costs"]["xqueryFirst"] = report.costs.xqueryFirst;
    j["estimate"]["cSparql"] = report.estimate.cSparql;
    j["estimate"]["cXquery"] = report.estimate.cXquery;
    j["estimate"]["cJoinParallel"] = report.estimate.cJoinParallel;
    j["estimate"]["cJoinSparqlFirst"] = report.estimate.cJoinSparqlFirst;
    j["estimate"]["rhoSparql"] = report.estimate.rhoSparql;
    j["estimate"]["rhoXquery"] = report.estimate.rhoXquery;
  }
  j["rewrites"]["sparql"] = report.sparqlText;
  if (report.xqueryText) j["rewrites"]["xquery"] = *report.xqueryText;
  if (report.executed) {
    j["phases"]["sparqlMs"] = report.phases.sparqlMs;
    j["phases"]["xqueryMs"] = report.phases.xqueryMs;
    j["phases"]["joinMs"] = report.phases.joinMs;
    j["phases"]["totalMs"] = report.phases.totalMs;
    j["resultRows"] = report.resultRows;
  }
  return j.dump(2) + "\n";
}

int cliMain(const std::vector<std::string>& args) {
  CLI::App app{"xqfed: federated SPARQL/XQuery query mediator"};
  app.require_subcommand(1);

  std::string queryFile, configFile, plan, estimate, format, docIds, outFile;
  std::string scenario = "all", catalogAction;
  bool explainFlag = false;
  std::uint64_t seed = 7;
  int reps = 5;

  auto* runCmd = app.add_subcommand("run", "Execute a query and print results");
  runCmd->add_option("-q,--query", queryFile, "Query file")->required();
  runCmd->add_option("-c,--config", configFile, "Config file")->required();
  runCmd->add_option("--plan", plan, "auto|parallel|sparql-first|xquery-first");
  runCmd->add_option("--estimate", estimate, "history|oracle|fixed:<6 csv numbers>");
  runCmd->add_option("--format", format, "json|csv|table");
  runCmd->add_flag("--explain", explainFlag, "Print the explain report to stderr");

  auto* explainCmd =
      app.add_subcommand("explain", "Show plan costs and rewrites without executing");
  explainCmd->add_option("-q,--query", queryFile, "Query file")->required();
  explainCmd->add_option("-c,--config", configFile, "Config file")->required();
  explainCmd->add_option("--plan", plan, "auto|parallel|sparql-first|xquery-first");
  explainCmd->add_option("--estimate", estimate, "history|oracle|fixed:<6 csv numbers>");
  explainCmd->add_option("--doc-ids", docIds, "Comma-separated document ids for pushdown rewrites");
  explainCmd->add_option("--format", format, "text|json");

  auto* benchCmd = app.add_subcommand("bench", "Run the scenario benchmark grid");
  benchCmd->add_option("--scenario", scenario, "cs|ls|ds|all");
  benchCmd->add_option("--seed", seed, "Scenario seed");
  benchCmd->add_option("--reps", reps, "Measured repetitions per grid cell");
  benchCmd->add_option("--out", outFile, "CSV output file (default stdout)");

  auto* catalogCmd = app.add_subcommand("catalog", "Inspect or clear the catalog");
  catalogCmd->add_option("action", catalogAction, "show|clear")->required();
  catalogCmd->add_option("-c,--config", configFile, "Config file")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream dummy;
    int rc = app.exit(e, dummy, dummy);
    std::cerr << dummy.str();
    return rc == 0 ? 0 : 1;
  }

  try {
    if (runCmd->parsed())
      return cmdRun(queryFile, configFile, plan, estimate, format, explainFlag);
    if (explainCmd->parsed())
      return cmdExplain(queryFile, configFile, plan, estimate, docIds, format);
    if (benchCmd->parsed()) return cmdBench(scenario, seed, reps, outFile);
    if (catalogCmd->parsed()) return cmdCatalog(catalogAction, configFile);
  } catch (const ParseError& e) {
    std::cerr << "error[" << stageName(e.stage()) << "]: " << e.describe() << "\n";
    return exitCodeFor(e.stage());
  } catch (const MediatorError& e) {
    std::cerr << "error[" << stageName(e.stage()) << "] "
              << errorCodeName(e.code()) << ": " << e.what() << "\n";
    return exitCodeFor(e.stage());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace xqfed
