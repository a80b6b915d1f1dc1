#pragma once

#include <stdexcept>
#include <string>

namespace pfbranch {

class ConstraintViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UnsupportedCase : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ThetaMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DefectiveLaw : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class RegimeMismatch : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotSupercritical : public RegimeMismatch {
public:
    using RegimeMismatch::RegimeMismatch;
};

class NotSubcritical : public RegimeMismatch {
public:
    using RegimeMismatch::RegimeMismatch;
};

class NotCritical : public RegimeMismatch {
public:
    using RegimeMismatch::RegimeMismatch;
};

class DegenerateDecomposition : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NonConvergent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TruncationTooCoarse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientSamples : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace pfbranch
