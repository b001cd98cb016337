#pragma once

#include <stdexcept>
#include <string>

namespace anwm {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated on-disk data. `field` names the offending entry.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationStuck : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankingFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anwm
