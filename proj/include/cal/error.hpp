#pragma once

#include <stdexcept>
#include <string>

namespace cal {

/// Base for every error raised by the engine. Callers that only need to
/// report a failure can catch this; the subclasses name the contract broken.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class SizingError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };

}  // namespace cal
