#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace twedge {

// All library failures carry a stable machine-readable code alongside the
// human message. The CLI prints "error: <code>: <message>" and exits 1.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool ok, const std::string& code, const std::string& message) {
    if (!ok) fail(code, message);
}

} // namespace twedge
