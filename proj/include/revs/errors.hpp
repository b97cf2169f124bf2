#pragma once

#include <stdexcept>
#include <string>

namespace revs {

// Bad or inconsistent input data: files, schemas, infeasible specs.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical solver gave up (inner iteration limit, model blow-up).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace revs
