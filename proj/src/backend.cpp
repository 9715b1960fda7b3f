#include "xqfed/backend.hpp"

#include <chrono>
#include <thread>

#include "xqfed/errors.hpp"

namespace xqfed {

void BackendConfig::validate() const {
  if (isHttp() && !endpointUrl)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "backend '" + id + "': HTTP kinds require endpointUrl");
  if (!isHttp() && endpointUrl)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "backend '" + id + "': mock kinds forbid endpointUrl");
  if (retryCount < 0)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "backend '" + id + "': retryCount must be >= 0");
  if (requestTimeoutMs <= 0)
    throw MediatorError(ErrorCode::ConfigError, Stage::Config,
                        "backend '" + id + "': requestTimeout must be > 0");
}

SparqlBackend::SparqlBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
}

BindingTable SparqlBackend::select(const std::string& queryText,
                                   CancelToken cancel) {
  calls_.fetch_add(1);
  return doSelect(queryText, cancel);
}

XmlBackend::XmlBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
}

XmlResultSequence XmlBackend::eval(const std::string& queryText,
                                   CancelToken cancel) {
  calls_.fetch_add(1);
  return doEval(queryText, cancel);
}

void simulateDelay(const std::string& backendId, double delayMs,
                   const CancelToken& cancel) {
  if (delayMs <= 0) return;
  using namespace std::chrono;
  auto deadline = steady_clock::now() +
                  duration_cast<steady_clock::duration>(duration<double, std::milli>(delayMs));
  constexpr auto slice = microseconds(200);
  while (steady_clock::now() < deadline) {
    if (cancel && cancel->load())
      throw BackendError(backendId, BackendError::Reason::Other,
                         "request cancelled");
    auto remaining = deadline - steady_clock::now();
    std::this_thread::sleep_for(remaining < slice ? remaining : steady_clock::duration(slice));
  }
}

}  // namespace xqfed
