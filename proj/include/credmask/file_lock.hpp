#pragma once

#include "credmask/error.hpp"

#include <string>

namespace credmask {

/// Exclusive, non-blocking advisory lock (flock) held for the object's
/// lifetime. flock locks belong to the open file description, so a second
/// lock attempt on the same path fails even from the same process.
class FileLock {
public:
    /// Locks `path`, creating it when `create` is set. Throws Error(code) when
    /// the lock is already held elsewhere.
    FileLock(const std::string& path, bool create, ErrorCode busy_code);
    ~FileLock();

    FileLock(FileLock&& other) noexcept;
    FileLock& operator=(FileLock&& other) noexcept;
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    void release() noexcept;

    std::string path_;
    int fd_ = -1;
};

} // namespace credmask
