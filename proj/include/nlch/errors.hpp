#pragma once
// Error taxonomy used across the library. ValidationError covers malformed
// input and configuration (CLI exit 2), StepFailure covers nonlinear-solver
// breakdown after all dt retries (CLI exit 3), CheckFailure covers a
// diagnostic that ran fine but found its assertion violated (CLI exit 1).

#include <stdexcept>
#include <string>

namespace nlch {

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

struct StepFailure : std::runtime_error {
    StepFailure(const std::string& what_arg, double res)
        : std::runtime_error(what_arg), residual(res) {}
    double residual = 0.0;
};

struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

} // namespace nlch
