#ifndef GTOPO_ERROR_HPP
#define GTOPO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gtopo {

// Numeric values are shared with the C API status codes in gtopo.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kModelConstruction = 3,
  kSampling = 4,
  kNumerical = 5,
  kDivergence = 6,
  kNonConvergence = 7,
  kInstability = 8,
  kIo = 9,
  kParse = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace gtopo

#endif  // GTOPO_ERROR_HPP
