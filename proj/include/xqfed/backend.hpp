#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xqfed/binding_table.hpp"

namespace xqfed {

struct SimulatedLatency {
  double fixedMs = 0;
  double perRowMs = 0;
};

struct BackendConfig {
  enum class Kind { SparqlHttp, XmlDbHttp, SparqlMock, XmlMock };
  enum class XmlHttpProfile { QueryInBody, QueryAsFormField };

  std::string id;
  Kind kind = Kind::SparqlMock;
  std::optional<std::string> endpointUrl;
  double requestTimeoutMs = 30000;
  int retryCount = 0;
  std::optional<std::string> authHeader;
  std::string collectionName;  // XML kinds
  std::optional<SimulatedLatency> simulatedLatency;  // mock kinds
  XmlHttpProfile xmlProfile = XmlHttpProfile::QueryInBody;

  bool isHttp() const {
    return kind == Kind::SparqlHttp || kind == Kind::XmlDbHttp;
  }
  bool isSparql() const {
    return kind == Kind::SparqlHttp || kind == Kind::SparqlMock;
  }

  /// Throws MediatorError{ConfigError} on violated invariants (HTTP kinds
  /// require endpointUrl, mock kinds forbid it, retryCount >= 0, timeout > 0).
  void validate() const;
};

/// Cooperative cancellation for in-flight sibling requests of the parallel
/// plan. Mock backends poll it while simulating latency; HTTP requests run to
/// completion and have their results discarded.
using CancelToken = std::shared_ptr<std::atomic<bool>>;

/// Result items of an XQuery evaluation: strings or serialized XML fragments.
using XmlResultSequence = std::vector<std::string>;

class SparqlBackend {
public:
  explicit SparqlBackend(BackendConfig config);
  virtual ~SparqlBackend() = default;

  const BackendConfig& config() const { return config_; }
  int callCount() const { return calls_.load(); }

  BindingTable select(const std::string& queryText, CancelToken cancel = {});

protected:
  virtual BindingTable doSelect(const std::string& queryText,
                                const CancelToken& cancel) = 0;

private:
  BackendConfig config_;
  std::atomic<int> calls_{0};
};

class XmlBackend {
public:
  explicit XmlBackend(BackendConfig config);
  virtual ~XmlBackend() = default;

  const BackendConfig& config() const { return config_; }
  int callCount() const { return calls_.load(); }

  XmlResultSequence eval(const std::string& queryText, CancelToken cancel = {});

  /// Total documents in the configured collection.
  virtual long countDocuments() = 0;

protected:
  virtual XmlResultSequence doEval(const std::string& queryText,
                                   const CancelToken& cancel) = 0;

private:
  BackendConfig config_;
  std::atomic<int> calls_{0};
};

/// Sleeps for the given simulated delay, polling the cancel token; throws
/// BackendError when cancelled.
void simulateDelay(const std::string& backendId, double delayMs,
                   const CancelToken& cancel);

}  // namespace xqfed
