#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace xqfed {

/// Stable 64-bit fingerprint of canonical query text (FNV-1a).
std::uint64_t fingerprint(const std::string& canonicalText);

/// Per-backend cost parameters. meanLatencyMs is the fixed per-request cost,
/// perResultCostMs the per-row transfer/processing cost, perDocProbeCostMs
/// the per-document evaluation cost of an XML collection scan.
struct BackendParams {
  double meanLatencyMs = 0;
  double perResultCostMs = 0;
  double perDocProbeCostMs = 0;
};

struct HistoryEntry {
  std::uint64_t queryFingerprint = 0;
  double observedCardinality = 0;
  double observedTimeMs = 0;
  std::string timestamp;        // ISO-8601 UTC
  std::string backendId;        // in-memory only, not persisted
};

/// Execution statistics: static per-backend parameters from configuration
/// plus an append-only observation history. Reads may run concurrently;
/// appends are serialized.
class CatalogStats {
public:
  void setBackendParams(const std::string& backendId, BackendParams params);
  std::optional<BackendParams> backendParams(const std::string& backendId) const;

  /// Base parameters with meanLatencyMs replaced by the running mean of this
  /// process's observations, once any exist.
  std::optional<BackendParams> effectiveParams(const std::string& backendId) const;

  void record(std::uint64_t queryFingerprint, double cardinality,
              double elapsedMs, const std::string& backendId = "",
              std::string timestamp = "");

  struct Aggregate {
    double meanCardinality = 0;
    double meanTimeMs = 0;
    std::size_t samples = 0;
  };
  std::optional<Aggregate> lookup(std::uint64_t queryFingerprint) const;

  std::size_t historySize() const;
  std::vector<HistoryEntry> historySnapshot() const;

  /// Entries recorded after the given watermark (for incremental persistence).
  std::vector<HistoryEntry> entriesSince(std::size_t watermark) const;

private:
  // behind a pointer so the stats (and owners like Mediator) stay movable
  mutable std::unique_ptr<std::shared_mutex> mutex_ =
      std::make_unique<std::shared_mutex>();
  std::map<std::string, BackendParams> perBackend_;
  std::map<std::string, std::pair<double, std::size_t>> runningMean_;
  std::vector<HistoryEntry> history_;
};

/// Current time as an ISO-8601 UTC timestamp.
std::string isoTimestampNow();

// Line-delimited catalog file: one entry per line,
// fingerprint(hex) <TAB> cardinality <TAB> elapsed-ms <TAB> ISO-8601 timestamp.
std::vector<HistoryEntry> readCatalogFile(const std::string& path);
void appendCatalogFile(const std::string& path,
                       const std::vector<HistoryEntry>& entries);
void clearCatalogFile(const std::string& path);

/// Loads a catalog file into stats (missing file yields an empty history).
void loadCatalog(CatalogStats& stats, const std::string& path);

}  // namespace xqfed
