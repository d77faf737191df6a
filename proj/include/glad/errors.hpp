#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace glad {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Errors caused by the caller's input (arguments, data, files). The CLI maps
/// these to exit code 2; everything else is exit code 1.
class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public InputError {
public:
    using InputError::InputError;
};

/// Carries the offending field ids so HTTP and CLI layers can list them.
class ValidationError : public InputError {
public:
    ValidationError(const std::string& what, std::vector<std::string> fields = {})
        : InputError(what), fields_(std::move(fields)) {}
    const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
    std::vector<std::string> fields_;
};

class EncodingError : public InputError {
public:
    using InputError::InputError;
};

class HeaderMismatch : public InputError {
public:
    HeaderMismatch(std::vector<std::string> missing, std::vector<std::string> extra);
    const std::vector<std::string>& missing() const noexcept { return missing_; }
    const std::vector<std::string>& extra() const noexcept { return extra_; }

private:
    std::vector<std::string> missing_;
    std::vector<std::string> extra_;
};

class CalibrationError : public InputError {
public:
    using InputError::InputError;
};

class EmptyCohort : public InputError {
public:
    using InputError::InputError;
};

class UnknownVariable : public InputError {
public:
    using InputError::InputError;
};

class LayoutMismatch : public InputError {
public:
    using InputError::InputError;
};

class LengthMismatch : public InputError {
public:
    using InputError::InputError;
};

class ZeroVariance : public InputError {
public:
    using InputError::InputError;
};

class EmptyTraining : public InputError {
public:
    using InputError::InputError;
};

/// No tree in the ensemble found an admissible split (e.g. constant outcome).
class DegenerateTraining : public InputError {
public:
    using InputError::InputError;
};

class MismatchedRuns : public InputError {
public:
    using InputError::InputError;
};

class FormatVersionMismatch : public InputError {
public:
    using InputError::InputError;
};

class IntegrityError : public InputError {
public:
    using InputError::InputError;
};

}  // namespace glad
