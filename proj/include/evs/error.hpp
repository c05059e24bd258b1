#pragma once

#include <stdexcept>
#include <string>

namespace evs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad entry spec, mismatched dimensions, overlapping sets.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A direct link with no positive gain cannot carry any power.
class NoSignalError : public Error {
public:
    using Error::Error;
};

/// An iterative solver hit its iteration cap before meeting tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Broken internal invariant (e.g. EVS verdict without box membership).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace evs
