#pragma once

#include <stdexcept>
#include <string>

namespace snav {

// Base of every error thrown by the library. The CLI maps these to a
// nonzero exit code and prints what() on stderr.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SNAV_DEFINE_ERROR(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

SNAV_DEFINE_ERROR(ParameterError);
SNAV_DEFINE_ERROR(GenerationError);
SNAV_DEFINE_ERROR(NoPathError);
SNAV_DEFINE_ERROR(GeometryError);
SNAV_DEFINE_ERROR(PartitionError);
SNAV_DEFINE_ERROR(SamplingError);
SNAV_DEFINE_ERROR(DegenerateRouteError);
SNAV_DEFINE_ERROR(LookupError);
SNAV_DEFINE_ERROR(ConfigurationError);
SNAV_DEFINE_ERROR(LifecycleError);
SNAV_DEFINE_ERROR(ShapeError);
SNAV_DEFINE_ERROR(DivergenceError);
SNAV_DEFINE_ERROR(CapacityError);
SNAV_DEFINE_ERROR(OracleError);
SNAV_DEFINE_ERROR(IoError);
SNAV_DEFINE_ERROR(FormatError);

#undef SNAV_DEFINE_ERROR

}  // namespace snav
