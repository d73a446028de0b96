#pragma once

#include <stdexcept>
#include <string>

namespace cellsleep {

// Raised when a simulator or controller is asked to act beyond the last step.
class EpisodeFinished : public std::logic_error {
 public:
  explicit EpisodeFinished(const std::string& what) : std::logic_error(what) {}
};

// Raised when a policy produces an action that is not valid for its mode.
class InvalidAction : public std::invalid_argument {
 public:
  explicit InvalidAction(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an estimator or normalizer is used before it was trained/fitted.
class NotFitted : public std::logic_error {
 public:
  explicit NotFitted(const std::string& what) : std::logic_error(what) {}
};

// Harness-level failures, each mapped to a process exit code.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ArtifactError : public std::runtime_error {
 public:
  explicit ArtifactError(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cellsleep
