#pragma once

#include <stdexcept>
#include <string>

namespace cycletrans {

/// Input violates a documented contract (bad rating, length mismatch, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called in a state it does not support (untrained model, empty input).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Text that tokenizes to nothing. Callers drop the record.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss, reward or gradient, or an epoch loss that blew up.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or inconsistent files (checkpoints, vocabularies, records).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cycletrans
