#pragma once

#include <stdexcept>

namespace stripflow {

/// Base class for all stripflow errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveParameter : Error { using Error::Error; };
struct AlphaOutOfRange : Error { using Error::Error; };
struct NonPositiveProfile : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct BracketNotFound : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct PinchOff : Error { using Error::Error; };
struct StepRejected : Error { using Error::Error; };
struct ToleranceNotReached : Error { using Error::Error; };
struct WindowTooShort : Error { using Error::Error; };
struct AmplitudeUnderflow : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace stripflow
