#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace credmask {

enum class ErrorCode {
    // store
    NotADatabase,
    SchemaError,
    SchemaMismatch,
    StoreBusy,
    ReadOnly,
    RowNotFound,
    RowIdConflict,
    MissingKeyStore,
    AlreadyExists,
    IoError,
    // vault
    WrongSecret,
    Tampered,
    BadVersion,
    DuplicateHost,
    UnknownHost,
    InvalidEntry,
    BadKdfParams,
    VaultLocked,
    // mask engine
    EmptySelection,
    AlreadyMasked,
    StalePlan,
    NothingMasked,
    UnresolvedConflict,
    // auth
    AuthFailed,
    AlreadyEnrolled,
    PolicyUnsatisfied,
    TooFewMinutiae,
    BadThreshold,
    // minutiae
    NotBinary,
    BadMargin,
    TraceTooShort,
    EmptyScores,
    BadParams,
    BadFormat,
    // generic
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure the library reports. The code is stable and drives the CLI
/// exit status; the message is for humans and never carries secret material.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace credmask
