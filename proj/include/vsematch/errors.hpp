#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vsematch {

// Base type for all library errors. The CLI maps subclasses onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A row that cannot be L2-normalized (norm below 1e-12).
struct ZeroVectorError : Error {
  explicit ZeroVectorError(std::ptrdiff_t row_index)
      : Error("embedding row " + std::to_string(row_index) +
              " is a zero vector and cannot be normalized"),
        row(row_index) {}
  std::ptrdiff_t row;
};

struct DimensionMismatchError : Error {
  using Error::Error;
};

struct InsufficientCandidatesError : Error {
  using Error::Error;
};

// A loss or matcher was handed rescaled (non-raw) similarity scores.
struct NotRawSimilarityError : Error {
  using Error::Error;
};

struct InvalidSpecError : Error {
  using Error::Error;
};

struct DivergedLossError : Error {
  using Error::Error;
};

struct MissingGroundTruthError : Error {
  explicit MissingGroundTruthError(std::ptrdiff_t query_index)
      : Error("query " + std::to_string(query_index) +
              " has no ground-truth items"),
        query(query_index) {}
  std::ptrdiff_t query;
};

struct TooFewQueriesError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace vsematch
