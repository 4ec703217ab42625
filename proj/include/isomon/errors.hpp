#pragma once
#include <stdexcept>
#include <string>

namespace isomon {

// Error taxonomy mirrors the CLI exit codes: validation 1, numerical 2, undetermined 3.
struct isomon_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct validation_error : isomon_error {
    using isomon_error::isomon_error;
};

// Step underflow, pole proximity, pole collision, radius underflow.
struct numerical_error : isomon_error {
    using isomon_error::isomon_error;
};

// A computation that finished without a verdict (rank ambiguity, retry budget).
struct undetermined_error : isomon_error {
    using isomon_error::isomon_error;
};

} // namespace isomon
