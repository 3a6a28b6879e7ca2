#pragma once

#include <stdexcept>
#include <string>

namespace phaseinfo {

// Validation errors: bad inputs, out-of-range parameters, schema mismatches.
// Mapped to exit code 2 by the CLI.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failures: estimator preconditions violated by the data itself,
// diverging fits, operator underflow. Mapped to exit code 3 by the CLI.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndivisibleGrid : ValidationError { using ValidationError::ValidationError; };
struct EmptySelection : ValidationError { using ValidationError::ValidationError; };
struct InvalidPartition : ValidationError { using ValidationError::ValidationError; };
struct KTooLarge : ValidationError { using ValidationError::ValidationError; };
struct InsufficientSamples : ValidationError { using ValidationError::ValidationError; };
struct VolumeTooLarge : ValidationError { using ValidationError::ValidationError; };
struct BlockTooLarge : ValidationError { using ValidationError::ValidationError; };
struct OutOfRange : ValidationError { using ValidationError::ValidationError; };
struct DomainError : ValidationError { using ValidationError::ValidationError; };
struct SchemaError : ValidationError { using ValidationError::ValidationError; };

struct DuplicatePoints : NumericalError { using NumericalError::NumericalError; };
struct SingularCovariance : NumericalError { using NumericalError::NumericalError; };
struct OperatorUnderflow : NumericalError { using NumericalError::NumericalError; };
struct NonMonotoneCurve : NumericalError { using NumericalError::NumericalError; };
struct FitDiverged : NumericalError { using NumericalError::NumericalError; };
struct DegenerateData : NumericalError { using NumericalError::NumericalError; };
struct LowContrast : NumericalError { using NumericalError::NumericalError; };
struct TooManyBadSlices : NumericalError { using NumericalError::NumericalError; };

}  // namespace phaseinfo
