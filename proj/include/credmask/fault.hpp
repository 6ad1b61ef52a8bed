#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

// Named crash points for exercising the mask/unmask write ordering.
//
// A point fires when its name equals the CREDMASK_CRASH_POINT environment
// variable or a name armed via arm(). The default action terminates the
// process immediately with kCrashExitCode (no destructors, no flushes), which
// is what an operator sees on power loss. Tests running in-process install a
// throwing action instead. In builds without CREDMASK_FAULT_INJECTION every
// point is a no-op.
namespace credmask::fault {

inline constexpr std::string_view kEnvVar = "CREDMASK_CRASH_POINT";
inline constexpr int kCrashExitCode = 70;

inline constexpr std::string_view kAfterVaultCommit = "after-vault-commit";
inline constexpr std::string_view kAfterStoreDelete = "after-store-delete";
inline constexpr std::string_view kAfterStoreInsert = "after-store-insert";
inline constexpr std::string_view kVaultBeforeRename = "vault-before-rename";

struct InjectedCrash : std::runtime_error {
    explicit InjectedCrash(std::string_view point)
        : std::runtime_error("injected crash at " + std::string(point))
    {
    }
};

[[nodiscard]] bool enabled() noexcept;

void point(std::string_view name);

/// Arms `name` in-process (overrides the environment). Empty disarms.
void arm(std::string name);
void set_action(std::function<void(std::string_view)> action);
void reset();

/// RAII arm + throwing action, for in-process tests.
class ScopedCrash {
public:
    explicit ScopedCrash(std::string name);
    ~ScopedCrash();
    ScopedCrash(const ScopedCrash&) = delete;
    ScopedCrash& operator=(const ScopedCrash&) = delete;
};

} // namespace credmask::fault
