#pragma once

#include <stdexcept>
#include <string>

namespace stlab {

/// Base class for all error conditions raised by this library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define STLAB_DEFINE_ERROR(name)                        \
  class name : public Error {                           \
   public:                                              \
    explicit name(const std::string& message)           \
        : Error(#name, message) {}                      \
  }

STLAB_DEFINE_ERROR(NonFiniteState);
STLAB_DEFINE_ERROR(NearPiRotation);
STLAB_DEFINE_ERROR(OutOfOrderFrame);
STLAB_DEFINE_ERROR(SolverFailure);
STLAB_DEFINE_ERROR(FactorEvaluationFailure);
STLAB_DEFINE_ERROR(RankDeficiency);
STLAB_DEFINE_ERROR(SchemaError);
STLAB_DEFINE_ERROR(FileError);
STLAB_DEFINE_ERROR(AlignmentFailure);
STLAB_DEFINE_ERROR(EmptyAfterTrim);
STLAB_DEFINE_ERROR(NotForwardMotion);

#undef STLAB_DEFINE_ERROR

}  // namespace stlab
