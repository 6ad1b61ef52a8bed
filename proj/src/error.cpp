#include "credmask/error.hpp"

namespace credmask {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NotADatabase: return "NotADatabase";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::StoreBusy: return "StoreBusy";
    case ErrorCode::ReadOnly: return "ReadOnly";
    case ErrorCode::RowNotFound: return "RowNotFound";
    case ErrorCode::RowIdConflict: return "RowIdConflict";
    case ErrorCode::MissingKeyStore: return "MissingKeyStore";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::WrongSecret: return "WrongSecret";
    case ErrorCode::Tampered: return "Tampered";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::DuplicateHost: return "DuplicateHost";
    case ErrorCode::UnknownHost: return "UnknownHost";
    case ErrorCode::InvalidEntry: return "InvalidEntry";
    case ErrorCode::BadKdfParams: return "BadKdfParams";
    case ErrorCode::VaultLocked: return "VaultLocked";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::AlreadyMasked: return "AlreadyMasked";
    case ErrorCode::StalePlan: return "StalePlan";
    case ErrorCode::NothingMasked: return "NothingMasked";
    case ErrorCode::UnresolvedConflict: return "UnresolvedConflict";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::AlreadyEnrolled: return "AlreadyEnrolled";
    case ErrorCode::PolicyUnsatisfied: return "PolicyUnsatisfied";
    case ErrorCode::TooFewMinutiae: return "TooFewMinutiae";
    case ErrorCode::BadThreshold: return "BadThreshold";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::BadMargin: return "BadMargin";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace credmask
