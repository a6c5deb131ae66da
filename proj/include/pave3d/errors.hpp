#pragma once

#include <stdexcept>
#include <string>

namespace pave3d {

/// Base class for all pipeline errors. Subclasses are named after the
/// failure they report so call sites and tests can catch them precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PAVE3D_ERROR(Name)                                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        using Error::Error;                                                  \
    }

// core
PAVE3D_ERROR(InvalidDepth);
PAVE3D_ERROR(OutOfBounds);
PAVE3D_ERROR(NonPositiveDepth);
PAVE3D_ERROR(ResolutionMismatch);

// dataio
PAVE3D_ERROR(MissingManifest);
PAVE3D_ERROR(MissingFile);
PAVE3D_ERROR(CorruptImage);
PAVE3D_ERROR(IoFailure);
PAVE3D_ERROR(ValidationError);
PAVE3D_ERROR(DefectOutsideLane);

// preprocess
PAVE3D_ERROR(RoiTooSmall);

// planefit
PAVE3D_ERROR(TooFewPoints);
PAVE3D_ERROR(Degenerate);

// features
PAVE3D_ERROR(EmptyImage);
PAVE3D_ERROR(ImageTooSmall);
PAVE3D_ERROR(EmptyDescriptorSet);

// registration
PAVE3D_ERROR(PointAtInfinity);
PAVE3D_ERROR(TooFewPairs);
PAVE3D_ERROR(DegenerateConfiguration);
PAVE3D_ERROR(NoValidModel);

// stitch
PAVE3D_ERROR(InsufficientOverlap);
PAVE3D_ERROR(BrokenChain);
PAVE3D_ERROR(EmptyInput);
PAVE3D_ERROR(GsdNonPositive);

// analyze
PAVE3D_ERROR(StationOutOfRange);
PAVE3D_ERROR(ProfileTooSparse);
PAVE3D_ERROR(NoMatchedPairs);
PAVE3D_ERROR(DegenerateVariance);

#undef PAVE3D_ERROR

}  // namespace pave3d
