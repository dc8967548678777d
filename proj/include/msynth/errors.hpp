#pragma once

#include <stdexcept>
#include <string>

namespace msynth {

// Error categories map onto the CLI exit codes: configuration problems exit 1,
// data problems exit 2, solver problems exit 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define MSYNTH_ERROR(Name, Base)                    \
  struct Name : Base {                              \
    explicit Name(const std::string& what)          \
        : Base(std::string(#Name) + ": " + what) {} \
  }

MSYNTH_ERROR(ParseError, DataError);
MSYNTH_ERROR(DuplicateAttribute, ConfigError);
MSYNTH_ERROR(EmptyDomain, ConfigError);
MSYNTH_ERROR(UnknownAttribute, ConfigError);
MSYNTH_ERROR(UnknownValue, DataError);
MSYNTH_ERROR(HeaderMismatch, DataError);
MSYNTH_ERROR(EmptyDataset, DataError);
MSYNTH_ERROR(CliqueTooLarge, SolverError);
MSYNTH_ERROR(NonPositiveParameter, ConfigError);
MSYNTH_ERROR(InvalidDelta, ConfigError);
MSYNTH_ERROR(InvalidParams, ConfigError);
MSYNTH_ERROR(InsufficientBudget, SolverError);
MSYNTH_ERROR(LengthMismatch, ConfigError);
MSYNTH_ERROR(EmptyCandidates, ConfigError);
MSYNTH_ERROR(SameAttribute, ConfigError);
MSYNTH_ERROR(Disconnected, SolverError);
MSYNTH_ERROR(MissingOneWay, ConfigError);
MSYNTH_ERROR(TreewidthTooLarge, SolverError);
MSYNTH_ERROR(EmptyLog, ConfigError);
MSYNTH_ERROR(NegativeMass, SolverError);
MSYNTH_ERROR(MissingAttribute, DataError);
MSYNTH_ERROR(NonIntegerLabel, DataError);
MSYNTH_ERROR(TooFewAttributes, ConfigError);
MSYNTH_ERROR(DomainMismatch, ConfigError);
MSYNTH_ERROR(BadConfig, ConfigError);

#undef MSYNTH_ERROR

}  // namespace msynth
