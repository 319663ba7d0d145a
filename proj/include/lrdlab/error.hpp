#pragma once

#include <stdexcept>
#include <string>

namespace lrd {

/// Error families; the numeric value is the CLI exit code.
enum class ErrorFamily : int {
  Config = 2,
  MemoryCap = 3,
  Quadrature = 4,
  Degenerate = 5,
  Io = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const noexcept { return family_; }
  int exit_code() const noexcept { return static_cast<int>(family_); }

 private:
  ErrorFamily family_;
};

#define LRD_DEFINE_ERROR(Name, Family)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what)                              \
        : Error(ErrorFamily::Family, #Name ": " + what) {}              \
  };

// parameter / model validity
LRD_DEFINE_ERROR(DomainError, Config)
LRD_DEFINE_ERROR(BoundaryError, Config)
LRD_DEFINE_ERROR(RankError, Config)
LRD_DEFINE_ERROR(SingularityError, Config)
LRD_DEFINE_ERROR(DimensionMismatch, Config)
LRD_DEFINE_ERROR(OutOfBounds, Config)
LRD_DEFINE_ERROR(ParseError, Config)
LRD_DEFINE_ERROR(ValidationError, Config)
// resources
LRD_DEFINE_ERROR(MemoryCapError, MemoryCap)
LRD_DEFINE_ERROR(SizeCapError, MemoryCap)
LRD_DEFINE_ERROR(TruncationError, MemoryCap)
// numerics
LRD_DEFINE_ERROR(QuadratureError, Quadrature)
LRD_DEFINE_ERROR(ConvergenceError, Quadrature)
// statistics
LRD_DEFINE_ERROR(DegenerateVariance, Degenerate)
LRD_DEFINE_ERROR(SingularFit, Degenerate)
// filesystem
LRD_DEFINE_ERROR(IoError, Io)

#undef LRD_DEFINE_ERROR

/// Default memory cap for dense arrays (bytes).
inline constexpr double kDefaultMemoryCapBytes = 2.0 * 1024 * 1024 * 1024;

inline void check_memory(double bytes, double cap, const std::string& what) {
  if (bytes > cap) {
    throw MemoryCapError(what + " needs " + std::to_string(bytes / (1 << 20)) +
                         " MiB, cap is " + std::to_string(cap / (1 << 20)) + " MiB");
  }
}

}  // namespace lrd
