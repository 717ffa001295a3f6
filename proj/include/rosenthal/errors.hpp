#pragma once

#include <stdexcept>
#include <string>

namespace rosenthal {

/// Base of every numerical failure raised by the library. Argument
/// validation failures use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TailNotConverged : public Error {
public:
    using Error::Error;
};

class TooManyAtoms : public Error {
public:
    using Error::Error;
};

class QuadratureNotConverged : public Error {
public:
    using Error::Error;
};

class ImaginaryResidualTooLarge : public Error {
public:
    using Error::Error;
};

class InfeasiblePath : public Error {
public:
    using Error::Error;
};

class ExponentTooSmall : public Error {
public:
    using Error::Error;
};

/// Exponent pairs for which no exact bound is known: p in (3,5) except
/// the even case p = 4, and q < 5 when p >= 5.
class UnsupportedExponents : public Error {
public:
    using Error::Error;
};

class NotZeroMean : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class SupportTooLarge : public Error {
public:
    using Error::Error;
};

class NewtonDiverged : public Error {
public:
    using Error::Error;
};

class InfeasibleMass : public Error {
public:
    using Error::Error;
};

} // namespace rosenthal
