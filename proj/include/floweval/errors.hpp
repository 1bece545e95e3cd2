#pragma once

#include <stdexcept>
#include <string>

namespace floweval {

/// Error categories; each maps to a distinct CLI exit code (see exit_code()).
enum class ErrorCode {
    InvalidArgument,
    DegenerateMask,
    EmptyBand,
    EmptyRegion,
    AllCellsExcluded,
    LengthMismatch,
    SubsetTooLarge,
    ParseError,
    ShapeMismatch,
    MissingChannel,
    NonFiniteData,
    ConflictingMetadata,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Exit code for the CLI: 0 success, 1 failed verification, 2 usage;
/// module errors start at 3 in enum order.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace floweval
