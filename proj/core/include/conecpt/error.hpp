#pragma once

#include <stdexcept>
#include <string>

namespace conecpt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, invalid parameters, broken invariants.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The LP solver failed to reach a verdict. Distinct from "infeasible".
class LpFailure : public Error {
public:
    using Error::Error;
};

/// A size or evaluation cap would be exceeded.
class CapExceeded : public Error {
public:
    CapExceeded(const std::string& what, double count) : Error(what), count_(count) {}
    double count() const { return count_; }

private:
    double count_;
};

/// Strategy fails self-financing or solvency checks.
class Inadmissible : public Error {
public:
    using Error::Error;
};

}  // namespace conecpt
