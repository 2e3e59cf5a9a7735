#pragma once

#include <stdexcept>
#include <string>

namespace geost {

enum class ErrorCode {
    invalid_argument = 1,
    io = 2,
    format = 3,
    numeric = 4,
    internal = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond)
        raise(code, what);
}

}  // namespace geost
