#pragma once

#include <stdexcept>
#include <string>

namespace nv {

enum class ErrorKind {
    usage,       // invalid parameters or inputs
    numerical,   // a computation could not meet its contract
    acceptance,  // an acceptance criterion failed
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Process exit code for an error kind: 1 usage, 2 numerical, 3 acceptance.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return 1;
        case ErrorKind::numerical: return 2;
        case ErrorKind::acceptance: return 3;
    }
    return 2;
}

[[noreturn]] inline void usage_error(const std::string& what) { throw Error(ErrorKind::usage, what); }
[[noreturn]] inline void numerical_error(const std::string& what) { throw Error(ErrorKind::numerical, what); }

}  // namespace nv
