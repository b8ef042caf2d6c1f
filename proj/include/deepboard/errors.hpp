#pragma once

#include <stdexcept>
#include <string>

namespace deepboard {

/// Base of every error thrown by the library. Subclasses name the failed contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define DEEPBOARD_ERROR(Name)                 \
    class Name : public Error {               \
    public:                                   \
        explicit Name(const std::string& msg) \
            : Error(#Name ": " + msg) {}      \
    }

DEEPBOARD_ERROR(InvalidArgument);

// core-math
DEEPBOARD_ERROR(DegenerateObserver);
DEEPBOARD_ERROR(BehindBillboard);
DEEPBOARD_ERROR(AspectMismatch);

// volume
DEEPBOARD_ERROR(NonUnitDirection);
DEEPBOARD_ERROR(ResolutionOverflow);

// assets
DEEPBOARD_ERROR(UnknownScene);
DEEPBOARD_ERROR(BadMagic);
DEEPBOARD_ERROR(UnsupportedVersion);
DEEPBOARD_ERROR(TruncatedFile);
DEEPBOARD_ERROR(IoError);

// proxy
DEEPBOARD_ERROR(LightParallelToGround);

// protocol
DEEPBOARD_ERROR(ShortBuffer);
DEEPBOARD_ERROR(FieldOutOfRange);
DEEPBOARD_ERROR(SessionClosed);

// client
DEEPBOARD_ERROR(DimensionMismatch);
DEEPBOARD_ERROR(ConnectionLost);

// world-field
DEEPBOARD_ERROR(EmptyInput);
DEEPBOARD_ERROR(InconsistentFrameSize);

#undef DEEPBOARD_ERROR

}  // namespace deepboard
