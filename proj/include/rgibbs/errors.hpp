#pragma once

#include <stdexcept>
#include <string>

namespace rgibbs {

/// Invalid distribution parameters or arguments outside an operation's domain.
class parameter_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A constraint set cannot be honoured under the current parameters: a zone
/// or interval with zero probability mass, or an initial state outside the
/// support. The CLI maps this to exit code 3.
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration (sample size too small for a case, bad quantile
/// spacing, unknown options). The CLI maps this to exit code 2.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class diagnostics_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rgibbs
