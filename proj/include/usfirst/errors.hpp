#pragma once

#include <stdexcept>
#include <string>

namespace usfirst {

// Base of every error the library raises; one subclass per failure mode.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define USFIRST_DEFINE_ERROR(Name)       \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// annotation-geometry
USFIRST_DEFINE_ERROR(DegenerateLine);
USFIRST_DEFINE_ERROR(ParallelReferenceLines);
USFIRST_DEFINE_ERROR(InvalidRatio);
USFIRST_DEFINE_ERROR(OutOfRange);

// dataset
USFIRST_DEFINE_ERROR(ParseError);
USFIRST_DEFINE_ERROR(ValidationError);
USFIRST_DEFINE_ERROR(MissingAssignment);
USFIRST_DEFINE_ERROR(DuplicateAssignment);

// calibration / metrics / decision-curve
USFIRST_DEFINE_ERROR(InvalidArgument);
USFIRST_DEFINE_ERROR(InsufficientData);
USFIRST_DEFINE_ERROR(EmptyResiduals);
USFIRST_DEFINE_ERROR(EmptyEvalSet);
USFIRST_DEFINE_ERROR(NoLabeledPairs);
USFIRST_DEFINE_ERROR(UnknownAbnormality);

// synthetic-cohort
USFIRST_DEFINE_ERROR(InvalidSpec);

#undef USFIRST_DEFINE_ERROR

}  // namespace usfirst
