#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xqfed {

/// Machine-readable error codes used across the mediator.
enum class ErrorCode {
  // parsing / validation
  SyntaxError,
  MultipleSparqlVarsInXQuery,
  NoSparqlVarInXQuery,
  MultipleXQueryFilters,
  NonBooleanReturn,
  XQueryFilterInService,
  LinkVarNotInPattern,
  VariableNotFound,
  NoXQueryFilter,
  // rewriting
  VariableNotInPattern,
  LinkVarNotInDocCall,
  DocCallAmbiguous,
  EmptyBindingList,
  // optimizer
  InvalidEstimate,
  NoStatsAvailable,
  // execution
  JoinKeyMissing,
  MalformedTupleResult,
  RowCapExceeded,
  BackendFailure,
  UnsupportedFeature,
  XQueryRuntimeError,
  // misc
  ConfigError,
  InfeasibleGrid,
};

const char* errorCodeName(ErrorCode code);

/// Pipeline stage where an error originated; maps to CLI exit codes.
enum class Stage { Config, Parse, Plan, Backend, Join };

const char* stageName(Stage stage);

class MediatorError : public std::runtime_error {
public:
  MediatorError(ErrorCode code, Stage stage, const std::string& message)
      : std::runtime_error(message), code_(code), stage_(stage) {}

  ErrorCode code() const { return code_; }
  Stage stage() const { return stage_; }

private:
  ErrorCode code_;
  Stage stage_;
};

/// Parse failure with a 1-based input position and the token set that would
/// have been accepted at that point.
class ParseError : public MediatorError {
public:
  ParseError(ErrorCode code, std::string message, int line, int column,
             std::vector<std::string> expected = {})
      : MediatorError(code, Stage::Parse, std::move(message)),
        line_(line), column_(column), expected_(std::move(expected)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

  std::string describe() const;

private:
  int line_;
  int column_;
  std::vector<std::string> expected_;
};

class BackendError : public MediatorError {
public:
  enum class Reason { Timeout, HttpStatus, MalformedResults, Connect, Other };

  BackendError(std::string backendId, Reason reason, const std::string& message)
      : MediatorError(ErrorCode::BackendFailure, Stage::Backend, message),
        backendId_(std::move(backendId)), reason_(reason) {}

  const std::string& backendId() const { return backendId_; }
  Reason reason() const { return reason_; }

private:
  std::string backendId_;
  Reason reason_;
};

}  // namespace xqfed
