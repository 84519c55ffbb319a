// Shared aliases and error types.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace evotune {

// All stochastic components draw from a caller-owned 64-bit generator so that
// runs are reproducible under a fixed seed.
using Rng = std::mt19937_64;

enum class EvalStatus { Ok, Failed };

struct InvalidConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidDataError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InsufficientPopulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotFittedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RejectedSubmissionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace evotune
