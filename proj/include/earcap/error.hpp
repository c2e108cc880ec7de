#pragma once

#include <stdexcept>
#include <string>

namespace earcap {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV/JSON); message carries file/line context.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Left/right recording streams that cannot be paired.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Arguments that violate an operation's contract (dimension mismatch,
// non-finite values, out-of-range configuration).
class InputError : public Error {
 public:
  using Error::Error;
};

// Too little data to perform the requested computation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Training preconditions not met (e.g. a single-class label set).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Probability calibration failed or is impossible.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Operation on an object in the wrong state (e.g. uncalibrated model).
class StateError : public Error {
 public:
  using Error::Error;
};

// Evaluation protocol preconditions not met by the dataset.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures; message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Unsupported or corrupt persisted formats (manifest, model files).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace earcap
