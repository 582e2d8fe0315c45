#pragma once

#include <stdexcept>
#include <string>

namespace visedit {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input document (JSON shape, binary layout, bad field values).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Phone timings that overlap or run backwards.
class OverlapError : public Error {
 public:
  using Error::Error;
};

// A phone code outside the recognized inventory.
class UnknownPhoneme : public Error {
 public:
  using Error::Error;
};

// Parameter frame with the wrong number of coefficients.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A word the pronunciation dictionary does not know.
class OutOfVocabulary : public Error {
 public:
  using Error::Error;
};

// A new word with no usable phone durations.
class MissingTiming : public Error {
 public:
  using Error::Error;
};

// An empty query or empty corpus where content is required.
class EmptyInput : public Error {
 public:
  using Error::Error;
};

// Query longer than the exhaustive-split limit.
class QueryTooLong : public Error {
 public:
  using Error::Error;
};

// A background region with no frames.
class EmptyRegion : public Error {
 public:
  using Error::Error;
};

// Snippet or region frames that fall outside the parameter track.
class OutOfTrackRange : public Error {
 public:
  using Error::Error;
};

// Blend window wider than both pieces adjacent to a transition.
class WindowTooLarge : public Error {
 public:
  using Error::Error;
};

// Too little corpus for a statistic to be defined.
class InsufficientCorpus : public Error {
 public:
  using Error::Error;
};

// Filesystem trouble while reading inputs or writing outputs.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace visedit
