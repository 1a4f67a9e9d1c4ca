#pragma once

#include <stdexcept>
#include <string>

namespace qrlab {

// Error taxonomy mirrored by the CLI exit codes: usage errors exit 1,
// data errors exit 2, numeric failures exit 3.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qrlab
