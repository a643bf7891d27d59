#pragma once

#include <stdexcept>
#include <string>

namespace steer {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegistrationError : public Error { using Error::Error; };
class KindError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class BatchError : public Error { using Error::Error; };
class LifecycleError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class EncodeError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };
class TransportError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class ScheduleError : public Error { using Error::Error; };

}  // namespace steer
