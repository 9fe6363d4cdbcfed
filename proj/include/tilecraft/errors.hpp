#pragma once

#include <stdexcept>
#include <string>

namespace tilecraft {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stepping a dead agent or a finished episode.
struct EpisodeOverError : std::logic_error {
  using std::logic_error::logic_error;
};

struct CorruptLogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Magic/version or spec digest mismatch.
struct IncompatibleVersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoScheduleError : std::logic_error {
  using std::logic_error::logic_error;
};

// Control-flow signal from the metered environment; trainers catch it.
struct BudgetExhausted : std::runtime_error {
  BudgetExhausted() : std::runtime_error("sample budget exhausted") {}
};

struct ComparisonError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace tilecraft
