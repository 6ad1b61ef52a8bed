#include "credmask/fault.hpp"

#include <cstdlib>
#include <mutex>
#include <optional>

namespace credmask::fault {

namespace {

struct State {
    std::mutex mutex;
    std::optional<std::string> armed;
    std::function<void(std::string_view)> action;
};

State& state()
{
    static State s;
    return s;
}

} // namespace

bool enabled() noexcept
{
#ifdef CREDMASK_FAULT_INJECTION
    return true;
#else
    return false;
#endif
}

void point(std::string_view name)
{
    if (!enabled()) {
        return;
    }
    std::function<void(std::string_view)> action;
    {
        auto& s = state();
        std::lock_guard lock(s.mutex);
        std::string target;
        if (s.armed) {
            target = *s.armed;
        } else if (const char* env = std::getenv(kEnvVar.data())) {
            target = env;
        }
        if (target.empty() || target != name) {
            return;
        }
        action = s.action;
    }
    if (action) {
        action(name);
        return;
    }
    std::_Exit(kCrashExitCode);
}

void arm(std::string name)
{
    auto& s = state();
    std::lock_guard lock(s.mutex);
    s.armed = std::move(name);
}

void set_action(std::function<void(std::string_view)> action)
{
    auto& s = state();
    std::lock_guard lock(s.mutex);
    s.action = std::move(action);
}

void reset()
{
    auto& s = state();
    std::lock_guard lock(s.mutex);
    s.armed.reset();
    s.action = nullptr;
}

ScopedCrash::ScopedCrash(std::string name)
{
    arm(std::move(name));
    set_action([](std::string_view p) { throw InjectedCrash(p); });
}

ScopedCrash::~ScopedCrash()
{
    reset();
}

} // namespace credmask::fault
