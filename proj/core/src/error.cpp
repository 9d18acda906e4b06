#include "harass/error.hpp"

namespace harass {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::LabelVoteMismatch: return "LabelVoteMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClassCorpus: return "SingleClassCorpus";
    case ErrorCode::TooFewItems: return "TooFewItems";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateCategory: return "DuplicateCategory";
    case ErrorCode::BadPattern: return "BadPattern";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownBlock: return "UnknownBlock";
    case ErrorCode::DuplicateBlock: return "DuplicateBlock";
    case ErrorCode::EmptySpec: return "EmptySpec";
    case ErrorCode::MissingResource: return "MissingResource";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeFeature: return "NegativeFeature";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

ErrorClass classify_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Config:
    case ErrorCode::UnknownBlock:
    case ErrorCode::DuplicateBlock:
    case ErrorCode::EmptySpec:
    case ErrorCode::MissingResource:
    case ErrorCode::KTooLarge:
      return ErrorClass::Config;
    case ErrorCode::ZeroVariance:
    case ErrorCode::NumericFailure:
      return ErrorClass::Numeric;
    default:
      return ErrorClass::Data;
  }
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(to_string(code)) + ": " + message);
}

}  // namespace harass
