#pragma once

#include "credmask/error.hpp"

#include <sodium.h>

namespace credmask::detail {

inline void ensure_sodium()
{
    static const bool ok = sodium_init() >= 0;
    if (!ok) {
        fail(ErrorCode::IoError, "libsodium initialisation failed");
    }
}

} // namespace credmask::detail
