#pragma once

#include <stdexcept>
#include <string>

namespace catching {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CATCHING_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

CATCHING_DEFINE_ERROR(InvalidArgument);
CATCHING_DEFINE_ERROR(NonPositiveDefiniteInertia);
CATCHING_DEFINE_ERROR(InvalidNormal);
CATCHING_DEFINE_ERROR(InfeasibleBox);
CATCHING_DEFINE_ERROR(NonConvex);
CATCHING_DEFINE_ERROR(NoInterceptInHorizon);
CATCHING_DEFINE_ERROR(DegenerateComponent);
CATCHING_DEFINE_ERROR(SingularSystem);
CATCHING_DEFINE_ERROR(DimensionMismatch);
CATCHING_DEFINE_ERROR(SingularArmConfiguration);
CATCHING_DEFINE_ERROR(DegenerateGeometry);
CATCHING_DEFINE_ERROR(NotPositiveDefinite);
CATCHING_DEFINE_ERROR(NumericalBlowup);
CATCHING_DEFINE_ERROR(SafetyStop);
CATCHING_DEFINE_ERROR(NoSteadyState);
CATCHING_DEFINE_ERROR(InsufficientPeaks);
CATCHING_DEFINE_ERROR(ConfigError);
CATCHING_DEFINE_ERROR(ParseError);

#undef CATCHING_DEFINE_ERROR

}  // namespace catching
