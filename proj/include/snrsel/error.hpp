#pragma once

#include <stdexcept>
#include <string>

namespace snrsel {

/// Process exit codes used by the CLI. Every library error maps onto one.
enum class ExitCode : int {
    kSuccess = 0,
    kValidation = 1,
    kData = 2,
    kIo = 3,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept = 0;
};

/// Bad configuration or bad arguments (off-grid SNR, empty split, ...).
class ValidationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

/// Input that violates an operation's precondition.
class InputError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

enum class DataErrorCode {
    kNonFinite,
    kChecksum,
    kTruncated,
    kConsistency,
    kFormat,
};

const char* to_string(DataErrorCode code) noexcept;

/// Malformed or corrupted data. The code distinguishes the failure mode.
class DataError : public Error {
public:
    DataError(DataErrorCode code, const std::string& what)
        : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ExitCode exit_code() const noexcept override { return ExitCode::kData; }
    DataErrorCode code() const noexcept { return code_; }

private:
    DataErrorCode code_;
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

}  // namespace snrsel
