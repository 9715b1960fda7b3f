#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xqfed/mock_backends.hpp"
#include "xqfed/rewrite.hpp"

namespace xqfed {

/// Synthetic desk-scale scenario: entities with numeric attributes linked to
/// dated XML documents, plus selectivity grids realized exactly by
/// construction.
struct ScenarioSpec {
  std::string name = "custom";
  int docCount = 0;
  int entityCount = 0;
  SimulatedLatency sparqlLatency;  // perRowMs charged per binding row
  SimulatedLatency xmlLatency;     // perRowMs charged per document evaluated
  std::vector<int> sparqlSelectivityGrid;
  std::vector<int> xquerySelectivityGrid;
  std::uint64_t seed = 1;

  void validate() const;  // throws MediatorError{InfeasibleGrid}
};

/// Three bundled scenario regimes at desk scale:
/// country search (slow SPARQL endpoint), law search (comparable backends),
/// discussion search (slow XML DB).
ScenarioSpec csScenario();
ScenarioSpec lsScenario();
ScenarioSpec dsScenario();

struct GeneratedScenario {
  TripleStore triples;
  XmlDocStore docs;
  std::string collectionName;
  int entityCount = 0;
  int docCount = 0;

  /// Query instantiated so the solo SPARQL instance yields exactly
  /// `sparqlSel` bindings and the solo XQuery instance exactly `xquerySel`
  /// documents.
  std::string queryFor(int sparqlSel, int xquerySel) const;

  std::string popThreshold(int sparqlSel) const;
  std::string dateThreshold(int xquerySel) const;
};

GeneratedScenario generateScenario(const ScenarioSpec& spec);

struct BenchRow {
  std::string scenario;
  PlanKind plan = PlanKind::Parallel;
  int sparqlSel = 0;
  int xquerySel = 0;
  double medianMs = 0;
  double sparqlMs = 0;
  double xqueryMs = 0;
  double joinMs = 0;
  bool chosenByOptimizer = false;
  std::vector<double> samplesMs;  // per-repetition totals (not in the CSV)
};

/// Executes every grid point under all three plans on latency-simulated mock
/// backends: `repetitions` measured runs per cell after one discarded warm-up,
/// medians reported per phase.
std::vector<BenchRow> runBenchmark(const ScenarioSpec& spec, int repetitions);

std::string benchCsv(const std::vector<BenchRow>& rows);

}  // namespace xqfed
