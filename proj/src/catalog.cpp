#include "xqfed/catalog.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "xqfed/errors.hpp"

namespace xqfed {

std::uint64_t fingerprint(const std::string& canonicalText) {
  // FNV-1a, stable across runs and platforms
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonicalText) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void CatalogStats::setBackendParams(const std::string& backendId,
                                    BackendParams params) {
  std::unique_lock lock(*mutex_);
  perBackend_[backendId] = params;
}

std::optional<BackendParams> CatalogStats::backendParams(
    const std::string& backendId) const {
  std::shared_lock lock(*mutex_);
  auto it = perBackend_.find(backendId);
  if (it == perBackend_.end()) return std::nullopt;
  return it->second;
}

std::optional<BackendParams> CatalogStats::effectiveParams(
    const std::string& backendId) const {
  std::shared_lock lock(*mutex_);
  auto it = perBackend_.find(backendId);
  if (it == perBackend_.end()) return std::nullopt;
  BackendParams p = it->second;
  auto mean = runningMean_.find(backendId);
  if (mean != runningMean_.end() && mean->second.second > 0)
    p.meanLatencyMs = mean->second.first / double(mean->second.second);
  return p;
}

void CatalogStats::record(std::uint64_t queryFingerprint, double cardinality,
                          double elapsedMs, const std::string& backendId,
                          std::string timestamp) {
  if (elapsedMs < 0)
    throw MediatorError(ErrorCode::InvalidEstimate, Stage::Plan,
                        "elapsed time must be non-negative");
  std::unique_lock lock(*mutex_);
  HistoryEntry e;
  e.queryFingerprint = queryFingerprint;
  e.observedCardinality = cardinality;
  e.observedTimeMs = elapsedMs;
  e.timestamp = timestamp.empty() ? isoTimestampNow() : std::move(timestamp);
  e.backendId = backendId;
  history_.push_back(std::move(e));
  if (!backendId.empty()) {
    auto& [sum, count] = runningMean_[backendId];
    sum += elapsedMs;
    count += 1;
  }
}

std::optional<CatalogStats::Aggregate> CatalogStats::lookup(
    std::uint64_t queryFingerprint) const {
  std::shared_lock lock(*mutex_);
  Aggregate agg;
  for (const auto& e : history_) {
    if (e.queryFingerprint != queryFingerprint) continue;
    agg.meanCardinality += e.observedCardinality;
    agg.meanTimeMs += e.observedTimeMs;
    agg.samples += 1;
  }
  if (agg.samples == 0) return std::nullopt;
  agg.meanCardinality /= double(agg.samples);
  agg.meanTimeMs /= double(agg.samples);
  return agg;
}

std::size_t CatalogStats::historySize() const {
  std::shared_lock lock(*mutex_);
  return history_.size();
}

std::vector<HistoryEntry> CatalogStats::historySnapshot() const {
  std::shared_lock lock(*mutex_);
  return history_;
}

std::vector<HistoryEntry> CatalogStats::entriesSince(std::size_t watermark) const {
  std::shared_lock lock(*mutex_);
  if (watermark >= history_.size()) return {};
  return std::vector<HistoryEntry>(history_.begin() + watermark, history_.end());
}

std::string isoTimestampNow() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<HistoryEntry> readCatalogFile(const std::string& path) {
  std::vector<HistoryEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string fp, card, elapsed, ts;
    if (!std::getline(ss, fp, '\t') || !std::getline(ss, card, '\t') ||
        !std::getline(ss, elapsed, '\t') || !std::getline(ss, ts))
      throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                          "malformed catalog line " + std::to_string(lineNo) +
                              " in " + path);
    HistoryEntry e;
    e.queryFingerprint = std::strtoull(fp.c_str(), nullptr, 16);
    e.observedCardinality = std::strtod(card.c_str(), nullptr);
    e.observedTimeMs = std::strtod(elapsed.c_str(), nullptr);
    e.timestamp = ts;
    out.push_back(std::move(e));
  }
  return out;
}

void appendCatalogFile(const std::string& path,
                       const std::vector<HistoryEntry>& entries) {
  if (entries.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "cannot open catalog file " + path);
  char buf[128];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%016" PRIx64 "\t%.0f\t%.3f\t",
                  e.queryFingerprint, e.observedCardinality, e.observedTimeMs);
    out << buf << e.timestamp << '\n';
  }
}

void clearCatalogFile(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
}

void loadCatalog(CatalogStats& stats, const std::string& path) {
  for (const auto& e : readCatalogFile(path))
    stats.record(e.queryFingerprint, e.observedCardinality, e.observedTimeMs,
                 e.backendId, e.timestamp);
}

}  // namespace xqfed
