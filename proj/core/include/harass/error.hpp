#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace harass {

enum class ErrorCode {
  InvalidArgument,
  Io,
  // corpus
  MalformedRow,
  UnknownType,
  UnknownLabel,
  DuplicateId,
  EmptyText,
  LabelVoteMismatch,
  LengthMismatch,
  SingleClassCorpus,
  TooFewItems,
  // lexicon
  ParseError,
  DuplicateCategory,
  BadPattern,
  ZeroVariance,
  EmptyGroup,
  // embeddings
  EmptyVocabulary,
  TooFewPoints,
  BadFormat,
  // vectorize
  EmptyCorpus,
  UnknownBlock,
  DuplicateBlock,
  EmptySpec,
  MissingResource,
  DimensionMismatch,
  // classify / evaluate
  NegativeFeature,
  SingleClass,
  KTooLarge,
  NotBinary,
  NumericFailure,
  Config,
};

/// Broad failure class, used to pick the process exit code.
enum class ErrorClass { Config, Data, Numeric };

std::string_view to_string(ErrorCode code);
ErrorClass classify_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace harass
